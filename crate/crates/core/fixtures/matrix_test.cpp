#include <cassert>
#include "Matrix.hpp"

class MatrixTest {
public:
    void testGetSet() {
        Matrix m(2, 3);
        m.set(0, 1, 2.5);
        m.set(1, 2, -1.0);
        assert(m.get(0, 1) == 2.5);
        assert(m.get(1, 2) == -1.0);
        assert(m.get(1, 0) == 0.0);
    }

    void testShape() {
        Matrix m(2, 3);
        assert(m.rows() == 2);
        assert(m.cols() == 3);
    }

    void testAdd() {
        Matrix a(2, 3);
        Matrix b(2, 3);
        a.set(0, 0, 1.5);
        b.set(0, 0, 2.0);
        b.set(1, 1, 4.0);
        Matrix c = a.add(b);
        assert(c.get(0, 0) == 3.5);
        assert(c.get(1, 1) == 4.0);
    }
};

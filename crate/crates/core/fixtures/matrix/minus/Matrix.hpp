#include <vector>

class Matrix {
    int nr;
    int nc;
    std::vector<double> v;

public:
    Matrix(int r, int c) : nr(r), nc(c), v(r * c, 0.0) {}

    int rows() const { return nr; }
    int cols() const { return nc; }
    double get(int r, int c) const { return v[r * nc + c]; }
    void set(int r, int c, double x) { v[r * nc + c] = x; }

    Matrix add(const Matrix& o) const {
        Matrix m(nr, nc);
        for (int i = 0; i < nr * nc; i++) {
            m.v[i] = v[i] - o.v[i];
        }
        return m;
    }
};

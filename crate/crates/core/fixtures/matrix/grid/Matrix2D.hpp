#include <vector>

namespace grid {

class Matrix2D {
public:
    Matrix2D(int rows, int cols) : cells(rows, std::vector<double>(cols, 0.0)) {}

    int rows() const { return static_cast<int>(cells.size()); }
    int cols() const { return cells.empty() ? 0 : static_cast<int>(cells[0].size()); }

    double get(int row, int col) const { return cells[row][col]; }

    void set(int row, int col, double v) { cells[row][col] = v; }

    Matrix2D add(const Matrix2D& rhs) const {
        Matrix2D sum(rows(), cols());
        for (int r = 0; r < rows(); r++)
            for (int c = 0; c < cols(); c++)
                sum.cells[r][c] = cells[r][c] + rhs.cells[r][c];
        return sum;
    }

private:
    std::vector<std::vector<double>> cells;
};

}  // namespace grid

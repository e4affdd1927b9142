#include <vector>

// Row-major dense matrix.
class Matrix {
public:
    Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double get(int r, int c) const { return data_[r * cols_ + c]; }
    void set(int r, int c, double value) { data_[r * cols_ + c] = value; }

    Matrix add(const Matrix& other) const {
        Matrix out(rows_, cols_);
        for (int i = 0; i < rows_ * cols_; ++i) {
            out.data_[i] = data_[i] + other.data_[i];
        }
        return out;
    }

private:
    int rows_;
    int cols_;
    std::vector<double> data_;
};

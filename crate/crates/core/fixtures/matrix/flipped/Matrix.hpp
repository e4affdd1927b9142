#include <vector>

class Matrix {
public:
    Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    // column-major lookup against row-major storage
    double get(int r, int c) const { return data_[c * rows_ + r]; }
    void set(int r, int c, double value) { data_[r * cols_ + c] = value; }

    Matrix add(const Matrix& other) const {
        Matrix out(rows_, cols_);
        for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] = data_[i] + other.data_[i];
        return out;
    }

private:
    int rows_, cols_;
    std::vector<double> data_;
};

#include <map>
#include <utility>

class Matrix {
public:
    Matrix(int rows, int cols) : rows_(rows), cols_(cols) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double at(int r, int c) const {
        auto it = cells_.find({r, c});
        return it == cells_.end() ? 0.0 : it->second;
    }
    void put(int r, int c, double value) { cells_[{r, c}] = value; }

    Matrix plus(const Matrix& other) const {
        Matrix out = *this;
        for (const auto& kv : other.cells_) out.cells_[kv.first] += kv.second;
        return out;
    }

private:
    int rows_;
    int cols_;
    std::map<std::pair<int, int>, double> cells_;
};

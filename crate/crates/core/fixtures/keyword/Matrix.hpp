class Matrix {
public:
    Matrix(int n) : size(n) {}
    int dimension() const { return size; }

private:
    int size;
};

class MatrixUtil {
public:
    static int trace(const int* cells, int n) {
        int t = 0;
        for (int i = 0; i < n; ++i) t += cells[i * n + i];
        return t;
    }
};

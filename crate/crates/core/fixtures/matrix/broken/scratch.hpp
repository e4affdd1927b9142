// half-written helper, no type yet
double scale(double x, double f) {
    return x * f;

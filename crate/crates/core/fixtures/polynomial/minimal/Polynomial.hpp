#include <vector>

struct Polynomial {
    std::vector<long> coefficients;

    Polynomial add(const Polynomial& other) const {
        Polynomial sum{coefficients};
        if (sum.coefficients.size() < other.coefficients.size()) sum.coefficients.resize(other.coefficients.size());
        for (std::size_t i = 0; i < other.coefficients.size(); i++) sum.coefficients[i] += other.coefficients[i];
        return sum;
    }
};

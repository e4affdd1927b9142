#include <string>

// Polynomial of degree at most three.
class Polynomial {
public:
    Polynomial(double a0, double a1, double a2, double a3) : k{a0, a1, a2, a3} {}

    Polynomial add(Polynomial q) {
        return Polynomial(k[0] + q.k[0], k[1] + q.k[1], k[2] + q.k[2], k[3] + q.k[3]);
    }

    std::string toString() {
        return std::to_string(k[3]) + "x^3+" + std::to_string(k[2]) + "x^2+" + std::to_string(k[1]) + "x+" +
               std::to_string(k[0]);
    }

private:
    double k[4];
};

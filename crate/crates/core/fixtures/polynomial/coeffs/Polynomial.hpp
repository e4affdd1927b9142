#include <sstream>
#include <string>
#include <vector>

class Polynomial {
public:
    Polynomial() {}
    explicit Polynomial(std::vector<int> coeffs) : c(coeffs) {}

    Polynomial add(Polynomial other) {
        std::vector<int> out(c.size() > other.c.size() ? c.size() : other.c.size(), 0);
        for (std::size_t i = 0; i < c.size(); ++i) out[i] += c[i];
        for (std::size_t i = 0; i < other.c.size(); ++i) out[i] += other.c[i];
        return Polynomial(out);
    }

    std::string toString() {
        std::ostringstream s;
        for (int i = getDegree(); i >= 0; --i) {
            s << c[i] << "x^" << i << (i > 0 ? " + " : "");
        }
        return s.str();
    }

    int getDegree() { return c.empty() ? 0 : static_cast<int>(c.size()) - 1; }

    Polynomial differentiate() {
        std::vector<int> d;
        for (std::size_t i = 1; i < c.size(); ++i) d.push_back(c[i] * static_cast<int>(i));
        return Polynomial(d);
    }

private:
    std::vector<int> c;
};

#include <map>
#include <string>

class Polynomial {
    std::map<int, double> terms;

public:
    Polynomial add(const Polynomial& p) const {
        Polynomial r = *this;
        for (const auto& t : p.terms) r.terms[t.first] += t.second;
        return r;
    }

    std::string toString() const {
        std::string out;
        for (const auto& t : terms) out += std::to_string(t.second) + "x^" + std::to_string(t.first) + " ";
        return out;
    }

    int getDegree() const { return terms.empty() ? 0 : terms.rbegin()->first; }
};

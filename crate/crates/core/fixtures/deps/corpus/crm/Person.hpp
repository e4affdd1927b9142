#include <string>

namespace crm {

class Person {
public:
    explicit Person(std::string n) : n_(n) {}
    std::string getName() const { return n_; }

private:
    std::string n_;
};

}

#include <string>

namespace hr {

class Person {
public:
    Person(std::string name, Address home) : name_(name), home_(home) {}
    std::string getName() const { return name_; }
    Address getHome() const { return home_; }
    std::string describe() const { return name_ + " @ " + home_.city() + " " + home_.zip(); }

private:
    std::string name_;
    Address home_;
};

}

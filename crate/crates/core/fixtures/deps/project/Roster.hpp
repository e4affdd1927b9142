#include <string>
#include <vector>

class Roster {
public:
    void enroll(const Person& p) {
        names.push_back(p.getName());
        cities.push_back(p.getHome().city());
    }

    Ghost haunt() const { return Ghost(); }

private:
    std::vector<std::string> names;
    std::vector<std::string> cities;
};

#include <string>

class Address {
public:
    Address(std::string city, std::string zip) : city_(city), zip_(zip) {}
    std::string city() const { return city_; }
    std::string zip() const { return zip_; }

private:
    std::string city_;
    std::string zip_;
};

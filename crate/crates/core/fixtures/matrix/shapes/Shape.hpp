class Shape {
public:
    virtual ~Shape() {}
    virtual double area() const = 0;
    virtual Shape* add(const Shape& other) const = 0;
};

#include <vector>

class Stack {
public:
    void push(int v) { items.push_back(v); }
    int pop() {
        int top = items.back();
        items.pop_back();
        return top;
    }
    int size() const { return static_cast<int>(items.size()); }
    bool isEmpty() const { return items.empty(); }

private:
    std::vector<int> items;
};

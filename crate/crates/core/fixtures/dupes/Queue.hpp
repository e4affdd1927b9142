#include <deque>

class Queue {
public:
    void push(int v) { items.push_back(v); }
    int pop() {
        int front = items.front();
        items.pop_front();
        return front;
    }
    int size() const { return static_cast<int>(items.size()); }

private:
    std::deque<int> items;
};

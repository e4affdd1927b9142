class Beta {
public:
    int pong(Alpha* other) { return other ? 1 : 0; }
    int relay(Alpha* a) { return a->ping(this); }
};

class Alpha {
public:
    int ping(Beta* other) { return other ? other->pong(this) + 1 : 0; }
};

class Pinger {
public:
    int start() {
        Alpha a;
        return a.ping(nullptr);
    }
};

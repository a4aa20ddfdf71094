int rpath_probe(void);

int main(void) { return rpath_probe() != 42; }

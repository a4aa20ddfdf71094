int runpath_probe(void) { return 3; }

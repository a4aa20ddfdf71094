int missing_probe(void) { return 1; }

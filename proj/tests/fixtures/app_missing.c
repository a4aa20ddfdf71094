int missing_probe(void);

int main(void) { return missing_probe(); }

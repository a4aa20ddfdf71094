int b_value = 7;

int b_twice(int x) { return 2 * x + b_value; }

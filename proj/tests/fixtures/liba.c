int b_twice(int x);

int a_entry(int x) { return b_twice(x) + 1; }

int old_impl(void) { return 1; }
int new_impl(void) { return 2; }
int stable(void) { return 3; }
int hidden_helper(void) { return 4; }

__asm__(".symver old_impl,versioned@VER_1");
__asm__(".symver new_impl,versioned@@VER_2");

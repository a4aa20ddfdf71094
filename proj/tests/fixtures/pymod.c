/* One source, three modules: -DPY3 exports PyInit_spam, -DPY2 exports initspam. */
void *spam_helper(void) { return 0; }

#if defined(PY3)
void *PyInit_spam(void) { return spam_helper(); }
#elif defined(PY2)
void initspam(void) { (void)spam_helper(); }
#endif

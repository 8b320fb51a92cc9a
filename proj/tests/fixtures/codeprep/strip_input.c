/* file header: copy(dst, src) helper
 * with a "quoted" word and a // marker */
#include <string.h>

static const char *banner = "/* not a comment */";  // trailing note
static const char *url = "http://example.com/path"; /* block */ int after;

int copy(char *dst, const char *src, int n) {
  int i = 0; /* inline /* nested-looking */
  char quote = '"';   // a quote char
  char slash = '/';   /* slash char */
  const char *s = "a \"string\" with // and /* inside */";
  for (i = 0; i < n; i++) { // loop
    dst[i] = src[i]; /**/
  }
  return i / 2; /* division */ // and a comment
}

/*
 * multi-line block
 * spanning lines
 */
int tail(void) {
  char esc = '\\'; // backslash char then comment
  const char *t = "end\\"; /* after escaped backslash */
  int x = 4 //comment without space
      / 2;
  return x * 3 /*mult*/ - 1;
}
// last line comment without newline at end of block
int final_value = 7;

#include <stdio.h>
#define LIMIT 16

int sum_buf(const char *buf, int len) {
    int total = 0;
    for (int i = 0; i < len; i++) {
        total += buf[i];
    }
    return total;
}

void show(const char *msg) {
    int total = strlen(msg);
    printf("%d %s\n", total, msg);
    sum_buf(msg, total);
}

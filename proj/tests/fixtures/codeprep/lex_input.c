typedef unsigned long size_type;

struct buffer {
    char *data;
    size_type len;
    size_type cap;
};

static int grow(struct buffer *b, size_type need) {
    size_type next = b->cap ? b->cap : 16;
    while (next < need) {
        next <<= 1;
    }
    char *p = realloc(b->data, next);
    if (p == NULL) {
        return -1;
    }
    b->data = p;
    b->cap = next;
    return 0;
}

int append(struct buffer *b, const char *src, size_type n) {
    if (b->len + n > b->cap && grow(b, b->len + n) != 0) {
        return -1;
    }
    memcpy(b->data + b->len, src, n);
    b->len += n;
    return (int)n;
}

unsigned hash(const char *s) {
    unsigned h = 0x811C9DC5u;
    while (*s) {
        h ^= (unsigned char)*s++;
        h *= 16777619u;
    }
    return h >> 3;
}

double ratio(int a, int b) {
    if (b == 0) return 0.0;
    double r = (double)a / b;
    r = r * 1.5e-3 + .25;
    return r >= 1.0 ? 1.0 : r;
}

int parse_flags(const char *arg) {
    int flags = 0;
    for (int i = 0; arg[i] != '\0'; ++i) {
        switch (arg[i]) {
            case 'v':
                flags |= 1;
                break;
            case 'q':
                flags &= ~1;
                break;
            default:
                flags ^= 0x10;
        }
    }
    return flags;
}

void shift_all(int *values, int count, int amount) {
    int k;
    for (k = 0; k < count; k++) {
        values[k] >>= amount;
        values[k] <<= 1;
        values[k] %= 97;
    }
}

const char *greeting(int formal) {
    return formal ? "Good day, \"sir\"" : "hi";
}

int compare(const void *x, const void *y) {
    const int *ix = (const int *)x;
    const int *iy = (const int *)y;
    return (*ix > *iy) - (*ix < *iy);
}

long total(const long *items, int n) {
    long acc = 0L;
    int idx = n;
    while (idx-- > 0) {
        acc += items[idx];
    }
    return acc;
}

int logic(int a, int b) {
    return (a && !b) || (a != b && a <= b);
}

int main(void) {
    struct buffer buf = {0};
    append(&buf, "abc", 3);
    printf("%u %d\n", hash(buf.data), logic(1, 0));
    free(buf.data);
    return 0;
}

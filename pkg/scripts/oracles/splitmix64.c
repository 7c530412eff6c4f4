/* Reference splitmix64 (Vigna). Prints the first three outputs for seeds 0 and 42. */
#include <stdint.h>
#include <stdio.h>

static uint64_t next(uint64_t *x) {
    uint64_t z = (*x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

int main(void) {
    uint64_t seeds[] = {0, 42};
    for (int s = 0; s < 2; s++) {
        uint64_t x = seeds[s];
        printf("seed %llu:", (unsigned long long)seeds[s]);
        for (int i = 0; i < 3; i++) printf(" 0x%016llX", (unsigned long long)next(&x));
        printf("\n");
    }
    return 0;
}

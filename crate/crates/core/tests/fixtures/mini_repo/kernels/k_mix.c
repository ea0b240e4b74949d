int k_mix(int n) {
    int total = 0;
    int step = n / 2 + 1;
    total = n;
    for (int i = 0; i < n; i++) { total = total + i * step; }
    int bias = step * 3 - n;
    if (bias > total) {
        total = bias;
    }
    while (total > 1000) {
        total = total / 2;
    }
    total -= bias;
    return (total + step) * n;
}

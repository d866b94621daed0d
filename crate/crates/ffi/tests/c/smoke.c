#include <stdio.h>
#include <stdlib.h>
#include "trackgnn.h"

int main(void) {
    TgGraph *g = NULL;
    TgParams *p = NULL;
    if (tg_graph_generate(1, 0, &g) != TG_STATUS_OK) return 1;
    if (tg_params_random(2, &p) != TG_STATUS_OK) return 2;
    size_t n = tg_graph_num_edges(g);
    double *a = malloc(n * sizeof(double));
    double *b = malloc(n * sizeof(double));
    if (tg_infer(g, p, TG_MODE_FIXED, 1, a, n) != TG_STATUS_OK) return 3;
    if (tg_infer_partitioned(g, p, TG_MODE_FIXED, 1, b, n) != TG_STATUS_OK) return 4;
    for (size_t i = 0; i < n; i++)
        if (a[i] != b[i]) return 5;
    if (tg_infer(g, p, TG_MODE_FIXED, 1, a, 3) != TG_STATUS_BUFFER_TOO_SMALL) return 6;
    size_t sizes_n[2] = {138, 62}, sizes_e[3] = {277, 77, 87};
    uint32_t pes[5];
    if (tg_allocate_data_aware(sizes_n, sizes_e, pes) != TG_STATUS_OK) return 7;
    TgSimSummary s;
    if (tg_simulate(TG_VARIANT_GEO_RSRC, NULL, 0, 200.0, 1, &s) != TG_STATUS_OK) return 8;
    printf("edges=%zu pes=%u,%u,%u,%u,%u mgps=%.3f\n", n, pes[0], pes[1], pes[2], pes[3], pes[4],
           s.throughput_mgps);
    free(a);
    free(b);
    tg_params_free(p);
    tg_graph_free(g);
    return 0;
}

/* Smoke test for the C ABI. Build (from the workspace root):
 *
 *   cargo build -p kdforest-ffi
 *   cc crates/ffi/examples/c_smoke.c -Icrates/ffi/include \
 *      target/debug/libkdforest_ffi.a -lpthread -ldl -lm -o c_smoke
 *   ./c_smoke
 */
#include "kdforest.h"

#include <assert.h>
#include <stdio.h>

int main(void) {
    KdfTree *tree = NULL;
    assert(kdf_tree_new(2, 16, 4, KdfSplitPolicy_NodeSplit, 2.0, true, &tree) == KdfStatus_Ok);

    const double pts[4][2] = {{0, 0}, {1, 0}, {2, 0}, {5, 0}};
    for (int i = 0; i < 4; i++) {
        assert(kdf_tree_add(tree, pts[i], 2, NULL) == KdfStatus_Ok);
    }
    assert(kdf_tree_live_count(tree) == 4);

    const double q[2] = {1.1, 0.0};
    KdfNeighbor hits[2];
    size_t len = 0;
    assert(kdf_tree_knn(tree, q, 2, 2, KdfKnnMode_Exact, hits, 2, &len) == KdfStatus_Ok);
    assert(len == 2 && hits[0].seq == 1 && hits[1].seq == 2);
    printf("knn ok: nearest seq=%llu d=%.3f then seq=%llu d=%.3f\n",
           (unsigned long long)hits[0].seq, hits[0].distance,
           (unsigned long long)hits[1].seq, hits[1].distance);

    assert(kdf_tree_rebuild(tree) == 4);
    assert(kdf_tree_depth(tree) <= 3);
    kdf_tree_free(tree);

    size_t trees = 0, cap = 0;
    assert(kdf_forest_size_plan(64000, &trees, &cap) == KdfStatus_Ok);
    assert(trees == 13 && cap == 4924);
    assert(kdf_estimate_rebuilds(64000) == 12);

    KdfForest *forest = NULL;
    assert(kdf_forest_new_for_points(500, 3, 8, &forest) == KdfStatus_Ok);
    for (int i = 0; i < 500; i++) {
        const double p[3] = {i % 23, i % 7, i % 11};
        assert(kdf_forest_add(forest, p, 3, NULL) == KdfStatus_Ok);
    }
    const double fq[3] = {4.2, 3.1, 5.0};
    KdfNeighbor fhits[8];
    assert(kdf_forest_knn(forest, fq, 3, 5, KdfForestMode_ExactForest, fhits, 8, &len) ==
           KdfStatus_Ok);
    assert(len == 5);
    printf("forest ok: %zu trees, nearest seq=%llu d=%.3f\n",
           kdf_forest_tree_count(forest), (unsigned long long)fhits[0].seq, fhits[0].distance);
    kdf_forest_free(forest);

    printf("c-abi smoke passed\n");
    return 0;
}

// Decompose the union of two intervals into Whitney cubes and print the
// distance/diameter ratio of every emitted cube.

#include <cstdio>

#include "mcz/mcz.hpp"

int main() {
    using namespace mcz;
    GridSpec g(1, 1.0 / 64, {-2 * 64}, {4 * 64});
    CellSet s = cells_of_box(g, Box{{0.0}, {1.0}}).unite(cells_of_box(g, Box{{2.0}, {3.0}}));

    WhitneyResult w = whitney(s);
    DistanceOracle oracle(s);
    std::printf("set measure %.6f, %zu cubes, %lld remainder cells\n", measure(s), w.cubes.size(),
                static_cast<long long>(w.remainder.count()));
    for (const auto& q : w.cubes) {
        const double d = oracle.dist(q.box());
        std::printf("  [%8.5f, %8.5f)  diam %.5f  dist %.5f  ratio %.3f\n", q.box().lo[0], q.box().hi[0],
                    q.diam(), d, d / q.diam());
    }
    return 0;
}

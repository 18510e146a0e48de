#pragma once

#include <algorithm>
#include <vector>

#include "sdfc/diff/param_store.hpp"
#include "sdfc/error.hpp"
#include "sdfc/geom/marching_cubes.hpp"
#include "sdfc/geom/point_cloud.hpp"
#include "sdfc/geom/trimesh.hpp"
#include "sdfc/net/encoder.hpp"
#include "sdfc/net/generator.hpp"

namespace sdfc::train {

inline constexpr double kCompletionGridHalfExtent = 1.1;

// encode the partial cloud, evaluate the generator over the grid on
// [-1.1, 1.1]^3, and extract the zero level set. The grid is evaluated in
// slabs to bound the value-path matrix sizes.
inline geom::TriMesh complete(const diff::ParamStore& enc, const diff::ParamStore& gen,
                              const net::NetConfig& cfg, const geom::PointCloud& v_part,
                              int grid_res) {
    if (v_part.empty()) throw InvalidInput("complete: empty input cloud");
    if (grid_res < 2) throw InvalidInput("complete: grid resolution must be >= 2");
    std::vector<double> z = net::encode_values(enc, cfg, v_part.points);

    geom::GridField field;
    field.res = grid_res;
    field.lo = {-kCompletionGridHalfExtent, -kCompletionGridHalfExtent,
                -kCompletionGridHalfExtent};
    field.hi = {kCompletionGridHalfExtent, kCompletionGridHalfExtent, kCompletionGridHalfExtent};
    const std::size_t side = static_cast<std::size_t>(grid_res) + 1;
    field.values.resize(side * side * side);

    // positions in vindex order (x fastest) so chunks map to value ranges
    std::vector<geom::Vec3> chunk;
    const std::size_t chunk_rows = std::max<std::size_t>(1, 16384 / side) * side;
    std::size_t written = 0;
    for (int k = 0; k <= grid_res; ++k)
        for (int j = 0; j <= grid_res; ++j)
            for (int i = 0; i <= grid_res; ++i) {
                chunk.push_back(field.position(i, j, k));
                if (chunk.size() == chunk_rows ||
                    (k == grid_res && j == grid_res && i == grid_res)) {
                    std::vector<double> vals = net::generate_values(gen, cfg, chunk, z);
                    std::copy(vals.begin(), vals.end(), field.values.begin() +
                                                            static_cast<std::ptrdiff_t>(written));
                    written += vals.size();
                    chunk.clear();
                }
            }

    geom::TriMesh mesh = geom::marching_cubes(field, 0.0);
    if (mesh.triangles.empty())
        throw EmptySurface("completion field has no zero crossing inside the grid");
    return mesh;
}

}  // namespace sdfc::train

#pragma once

#include <cstddef>
#include <vector>

#include "sdfc/error.hpp"

namespace sdfc::train {

// Coarse-to-fine point schedule: fixed-length stages over doubling sample
// counts, then a refinement tail at the final count.
struct Schedule {
    std::vector<std::size_t> stage_points{128, 256, 512};
    std::size_t epochs_per_stage = 60;
    std::size_t refine_epochs = 100;

    void validate() const {
        if (stage_points.empty()) throw ConfigError("schedule: no stages");
        if (epochs_per_stage == 0) throw ConfigError("schedule: epochs_per_stage must be positive");
        for (std::size_t i = 0; i < stage_points.size(); ++i) {
            if (stage_points[i] == 0) throw ConfigError("schedule: stage point count must be positive");
            if (i > 0 && stage_points[i] != 2 * stage_points[i - 1])
                throw ConfigError("schedule: stage point counts must double");
        }
    }

    std::size_t total_epochs() const {
        return stage_points.size() * epochs_per_stage + refine_epochs;
    }

    // stage index for a zero-based epoch; the refinement tail reports the
    // last stage
    std::size_t stage_at(std::size_t epoch) const {
        if (epoch >= total_epochs()) throw InvalidInput("schedule: epoch past end of schedule");
        std::size_t stage = epoch / epochs_per_stage;
        if (stage >= stage_points.size()) stage = stage_points.size() - 1;
        return stage;
    }

    std::size_t points_at(std::size_t epoch) const { return stage_points[stage_at(epoch)]; }
};

}  // namespace sdfc::train

#pragma once

#include "softscreen/config.hpp"
#include "softscreen/membrane.hpp"

#include <filesystem>
#include <string>

namespace testing_support {

inline const softscreen::config::Calibration& calibration() {
    static const auto cal = softscreen::config::default_calibration();
    return cal;
}

inline const softscreen::navigation::Robot& robot() {
    static const auto r = softscreen::config::make_robot(calibration());
    return r;
}

inline softscreen::membrane::Chamber chamber(softscreen::membrane::FlangeStyle style, int n_nodes = 48) {
    auto block = calibration().membrane;
    block.profile.flange_style = style;
    block.profile.n_nodes = n_nodes;
    return softscreen::config::make_chamber(block);
}

inline std::filesystem::path source_dir() { return SOFTSCREEN_SOURCE_DIR; }

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("softscreen_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace testing_support

#pragma once

#include "wmevade/image.hpp"
#include "wmevade/rng.hpp"

#include <filesystem>
#include <string>

namespace testing {

inline wmevade::ImageU8 random_image(int h, int w, int c, std::uint64_t seed)
{
    wmevade::Rng rng(seed);
    wmevade::ImageU8 img(h, w, c);
    for (auto& v : img.samples())
        v = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

inline std::filesystem::path desk_dir() { return WMEVADE_DESK_DIR; }

inline wmevade::ImageU8 desk_image(int index)
{
    char name[32];
    std::snprintf(name, sizeof name, "desk_%03d.png", index);
    return wmevade::load_image(desk_dir() / name);
}

inline std::filesystem::path scratch_dir(const std::string& leaf)
{
    auto p = std::filesystem::temp_directory_path() / ("wmevade_test_" + leaf);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace testing

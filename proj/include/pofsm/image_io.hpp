#pragma once

// File formats.
//
//   PPM (P6) / PGM (P5): 8-bit binary, maxval 255. Float planes are
//   clamped to [0, 1] and scaled by 255 on save; loads divide by 255.
//
//   Flow field "POFF v1 <rows> <cols>\n": raw little-endian f32,
//   u plane then v plane, row-major. Lossless round trip.
//
//   Mapped image "POFSM v1 <rows> <cols>\n": raw little-endian f32,
//   channel-planar pof_h, pof_v, sm, row-major. Lossless round trip.

#include <filesystem>

#include "pofsm/flow_types.hpp"
#include "pofsm/image.hpp"

namespace pofsm {

void save_ppm(const ImageRgb& img, const std::filesystem::path& path);
ImageRgb load_ppm(const std::filesystem::path& path);

// Dispatches on the extension; .pgm loads replicate gray into all planes.
ImageRgb load_image_rgb(const std::filesystem::path& path);

void save_pgm(const Plane& gray, const std::filesystem::path& path);
Plane load_pgm(const std::filesystem::path& path);

void save_flow(const FlowField<float>& flow, const std::filesystem::path& path);
FlowField<float> load_flow(const std::filesystem::path& path);

void save_pofsm(const PofSmImage& img, const std::filesystem::path& path);
PofSmImage load_pofsm(const std::filesystem::path& path);

}  // namespace pofsm

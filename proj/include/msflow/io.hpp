#ifndef MSFLOW_IO_HPP
#define MSFLOW_IO_HPP

#include "msflow/types.hpp"

#include <filesystem>
#include <vector>

namespace msflow {

enum class ChannelRole { visible, nir };

/// Loads a binary PGM/PPM (P5/P6) and scales samples by 1/maxval.
/// Visible rasters keep 1 or 3 channels; nir rasters must be single channel.
std::vector<PlaneD> load_image(const std::filesystem::path& path, ChannelRole role);

/// Pairs a visible raster with an optional nir raster, checking dimensions.
MultispectralImage make_multispectral(std::vector<PlaneD> visible, std::optional<PlaneD> nir);

MultispectralImage load_multispectral(const std::filesystem::path& visible_path,
                                      const std::optional<std::filesystem::path>& nir_path);

/// Writes 1 (P5) or 3 (P6) planes with values in [0,1], clamped and rounded.
/// bit_depth is 8 or 16.
void write_pnm(const std::filesystem::path& path, const std::vector<PlaneD>& channels, int bit_depth = 8);

void write_gray8(const std::filesystem::path& path, const PlaneU8& image);
void write_rgb8(const std::filesystem::path& path, const std::vector<PlaneU8>& rgb);

/// Flow interchange: "PIEH", int32 width, int32 height, interleaved float32 (u,v), all little endian.
FlowField read_flow(const std::filesystem::path& path);
void write_flow(const FlowField& field, const std::filesystem::path& path);

}  // namespace msflow

#endif  // MSFLOW_IO_HPP

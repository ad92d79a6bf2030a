#pragma once

#include <filesystem>
#include <string>

#include "ptb/nn_cert.hpp"

namespace ptb::harness {

/// Binary weight file: a text manifest
///
///   PTB-WEIGHTS 1
///   layers=<K>
///   width=<m>
///   precision=f64le
///   lipschitz_loss=<L>
///   input_radius=<R_X>
///   payload_bytes=<8 K m^2>
///   <blank line>
///
/// followed by little-endian float64 entries, layer-major, row-major within a
/// layer. Loading throws FormatError on any structural mismatch and
/// ValidationError on non-finite entries.
std::string encode_weights_binary(const nn::NetworkWeights& w);
nn::NetworkWeights decode_weights_binary(const std::string& bytes);

/// JSON variant with nested arrays; refused above kJsonMaxDimension parameters.
inline constexpr std::size_t kJsonMaxDimension = 10000;
std::string encode_weights_json(const nn::NetworkWeights& w);
nn::NetworkWeights decode_weights_json(const std::string& text);

/// Format chosen by extension: ".json" is JSON, anything else binary.
void save_weights(const std::filesystem::path& path, const nn::NetworkWeights& w);
/// Format sniffed from content: a leading '{' means JSON.
nn::NetworkWeights load_weights(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace ptb::harness

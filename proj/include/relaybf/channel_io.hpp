#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "relaybf/network.hpp"

namespace relaybf {

/// Failure classes of the channel file reader. The values double as process
/// exit codes in the command-line tool.
enum class ChannelFileError : int {
  Io = 10,
  BadMagic = 11,
  UnsupportedVersion = 12,
  Truncated = 13,
  DimensionMismatch = 14,
};

const char* to_string(ChannelFileError e);

class ChannelFileException : public std::runtime_error {
 public:
  ChannelFileException(ChannelFileError code, const std::string& what);
  ChannelFileError code() const { return code_; }

 private:
  ChannelFileError code_;
};

inline constexpr std::uint16_t kChannelFileVersion = 1;

/// One stored draw: the channels and the initial filters derived from them.
struct StoredInstance {
  ChannelSet ch;
  BeamformerSet bf;
};

/// Contents of a channel file. `cfg` carries the stored dimensions and SNR
/// pair; the remaining fields keep their defaults.
struct ChannelFile {
  NetworkConfig cfg;
  std::uint64_t master_seed = 0;
  std::vector<StoredInstance> instances;
};

/// Layout, all little-endian:
///   "RNAC", u16 version, u32 K d M N R, f64 snr_t_db snr_r_db, u64 seed,
///   u32 instance count, then per instance the matrices J (by (k,i)), G (by
///   (k,r)), H2 (by (r,i)), u, F, vbar. Matrix entries are stored row-major,
///   each as two f64 (real, imaginary).
void save_channels(const std::string& path, const ChannelFile& file);
ChannelFile load_channels(const std::string& path);

/// Byte-level codec behind the file functions.
std::vector<std::uint8_t> encode_channels(const ChannelFile& file);
ChannelFile decode_channels(const std::vector<std::uint8_t>& bytes);

}  // namespace relaybf

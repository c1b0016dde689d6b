#include "relaybf/channel_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace relaybf {

static_assert(std::endian::native == std::endian::little, "channel files assume a little-endian host");

namespace {

constexpr char kMagic[4] = {'R', 'N', 'A', 'C'};

class Writer {
 public:
  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }

  void put_matrix(const CMatrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        put(m(i, j).real());
        put(m(i, j).imag());
      }
    }
  }

  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    if (pos_ + sizeof(T) > bytes_.size()) {
      throw ChannelFileException(ChannelFileError::Truncated,
                                 std::string("file ends inside ") + what + " at byte " + std::to_string(pos_));
    }
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  CMatrix get_matrix(Eigen::Index rows, Eigen::Index cols, const char* what) {
    CMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        const double re = get<double>(what);
        const double im = get<double>(what);
        m(i, j) = cplx(re, im);
      }
    }
    return m;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

void check_shape(const CMatrix& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ChannelFileException(ChannelFileError::DimensionMismatch,
                               std::string(what) + " does not match the dimension header");
  }
}

}  // namespace

const char* to_string(ChannelFileError e) {
  switch (e) {
    case ChannelFileError::Io: return "io";
    case ChannelFileError::BadMagic: return "bad-magic";
    case ChannelFileError::UnsupportedVersion: return "unsupported-version";
    case ChannelFileError::Truncated: return "truncated";
    case ChannelFileError::DimensionMismatch: return "dimension-mismatch";
  }
  return "unknown";
}

ChannelFileException::ChannelFileException(ChannelFileError code, const std::string& what)
    : std::runtime_error(std::string("channel file (") + to_string(code) + "): " + what), code_(code) {}

std::vector<std::uint8_t> encode_channels(const ChannelFile& file) {
  const NetworkConfig& c = file.cfg;
  Writer w;
  for (char ch : kMagic) w.put(ch);
  w.put(kChannelFileVersion);
  for (int v : {c.K, c.d, c.M, c.N, c.R}) w.put(static_cast<std::uint32_t>(v));
  w.put(c.snr_t_db);
  w.put(c.snr_r_db);
  w.put(file.master_seed);
  w.put(static_cast<std::uint32_t>(file.instances.size()));
  for (const auto& inst : file.instances) {
    for (int k = 0; k < c.K; ++k)
      for (int i = 0; i < c.K; ++i) {
        check_shape(inst.ch.J.at(k).at(i), c.M, c.M, "J");
        w.put_matrix(inst.ch.J[k][i]);
      }
    for (int k = 0; k < c.K; ++k)
      for (int r = 0; r < c.R; ++r) {
        check_shape(inst.ch.G.at(k).at(r), c.M, c.N, "G");
        w.put_matrix(inst.ch.G[k][r]);
      }
    for (int r = 0; r < c.R; ++r)
      for (int i = 0; i < c.K; ++i) {
        check_shape(inst.ch.H2.at(r).at(i), c.N, c.M, "H2");
        w.put_matrix(inst.ch.H2[r][i]);
      }
    for (int k = 0; k < c.K; ++k)
      for (int l = 0; l < c.d; ++l) {
        check_shape(inst.bf.u.at(k).at(l), c.M, 1, "u");
        w.put_matrix(inst.bf.u[k][l]);
      }
    for (int r = 0; r < c.R; ++r) {
      check_shape(inst.bf.F.at(r), c.N, c.N, "F");
      w.put_matrix(inst.bf.F[r]);
    }
    for (int k = 0; k < c.K; ++k)
      for (int l = 0; l < c.d; ++l) {
        check_shape(inst.bf.vbar.at(k).at(l), 2 * c.M, 1, "vbar");
        w.put_matrix(inst.bf.vbar[k][l]);
      }
  }
  return w.take();
}

ChannelFile decode_channels(const std::vector<std::uint8_t>& bytes) {
  Reader rd(bytes);
  char magic[4];
  for (char& ch : magic) {
    if (rd.remaining() < 1) throw ChannelFileException(ChannelFileError::BadMagic, "file shorter than the magic");
    ch = rd.get<char>("magic");
  }
  if (std::memcmp(magic, kMagic, 4) != 0) throw ChannelFileException(ChannelFileError::BadMagic, "magic is not RNAC");
  const auto version = rd.get<std::uint16_t>("version");
  if (version != kChannelFileVersion) {
    throw ChannelFileException(ChannelFileError::UnsupportedVersion,
                               "version " + std::to_string(version) + ", expected " +
                                   std::to_string(kChannelFileVersion));
  }
  ChannelFile file;
  NetworkConfig& c = file.cfg;
  std::uint32_t dims[5];
  for (auto& v : dims) v = rd.get<std::uint32_t>("dimension header");
  for (auto v : dims) {
    if (v == 0 || v > 4096) {
      throw ChannelFileException(ChannelFileError::DimensionMismatch, "dimension out of range: " + std::to_string(v));
    }
  }
  c.K = static_cast<int>(dims[0]);
  c.d = static_cast<int>(dims[1]);
  c.M = static_cast<int>(dims[2]);
  c.N = static_cast<int>(dims[3]);
  c.R = static_cast<int>(dims[4]);
  if (c.d > c.M) throw ChannelFileException(ChannelFileError::DimensionMismatch, "more streams than antennas");
  c.snr_t_db = rd.get<double>("SNR header");
  c.snr_r_db = rd.get<double>("SNR header");
  file.master_seed = rd.get<std::uint64_t>("seed");
  const auto count = rd.get<std::uint32_t>("instance count");

  const std::size_t complex_entries =
      static_cast<std::size_t>(c.K) * c.K * c.M * c.M + static_cast<std::size_t>(c.K) * c.R * c.M * c.N * 2 +
      static_cast<std::size_t>(c.K) * c.d * c.M * 3 + static_cast<std::size_t>(c.R) * c.N * c.N;
  const std::size_t expected = static_cast<std::size_t>(count) * complex_entries * 16;
  if (rd.remaining() > expected) {
    throw ChannelFileException(ChannelFileError::DimensionMismatch,
                               std::to_string(rd.remaining() - expected) + " bytes beyond the size implied by the header");
  }

  file.instances.resize(count);
  for (auto& inst : file.instances) {
    inst.ch.J.assign(c.K, std::vector<CMatrix>(c.K));
    inst.ch.G.assign(c.K, std::vector<CMatrix>(c.R));
    inst.ch.H2.assign(c.R, std::vector<CMatrix>(c.K));
    for (int k = 0; k < c.K; ++k)
      for (int i = 0; i < c.K; ++i) inst.ch.J[k][i] = rd.get_matrix(c.M, c.M, "J");
    for (int k = 0; k < c.K; ++k)
      for (int r = 0; r < c.R; ++r) inst.ch.G[k][r] = rd.get_matrix(c.M, c.N, "G");
    for (int r = 0; r < c.R; ++r)
      for (int i = 0; i < c.K; ++i) inst.ch.H2[r][i] = rd.get_matrix(c.N, c.M, "H2");
    inst.bf.u.assign(c.K, std::vector<CVector>(c.d));
    for (int k = 0; k < c.K; ++k)
      for (int l = 0; l < c.d; ++l) inst.bf.u[k][l] = rd.get_matrix(c.M, 1, "u");
    inst.bf.F.resize(c.R);
    for (int r = 0; r < c.R; ++r) inst.bf.F[r] = rd.get_matrix(c.N, c.N, "F");
    inst.bf.vbar.assign(c.K, std::vector<CVector>(c.d));
    for (int k = 0; k < c.K; ++k)
      for (int l = 0; l < c.d; ++l) inst.bf.vbar[k][l] = rd.get_matrix(2 * c.M, 1, "vbar");
  }
  return file;
}

void save_channels(const std::string& path, const ChannelFile& file) {
  const auto bytes = encode_channels(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ChannelFileException(ChannelFileError::Io, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ChannelFileException(ChannelFileError::Io, "write to " + path + " failed");
}

ChannelFile load_channels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ChannelFileException(ChannelFileError::Io, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_channels(bytes);
}

}  // namespace relaybf

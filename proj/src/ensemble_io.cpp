#include "qgbsde/ensemble_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "qgbsde/errors.hpp"

namespace qgbsde {

namespace {

constexpr std::array<char, 4> kMagic{'Q', 'G', 'B', '1'};

template <class T>
void put_le(std::ostream& out, T value) {
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), bytes.size());
}

template <class T>
T get_le(std::istream& in) {
    std::array<char, sizeof(T)> bytes;
    if (!in.read(bytes.data(), bytes.size())) throw EnsembleFormatError("ensemble file truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

void put_array(std::ostream& out, const std::vector<double>& values) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(double)));
    } else {
        for (double v : values) put_le(out, v);
    }
}

void get_array(std::istream& in, std::vector<double>& values) {
    if constexpr (std::endian::native == std::endian::little) {
        if (!in.read(reinterpret_cast<char*>(values.data()),
                     static_cast<std::streamsize>(values.size() * sizeof(double))))
            throw EnsembleFormatError("ensemble file truncated");
    } else {
        for (double& v : values) v = get_le<double>(in);
    }
}

}  // namespace

void write_ensemble(const std::filesystem::path& file, const PathEnsemble& ens) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw EnsembleFormatError("cannot open " + file.string() + " for writing");
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint64_t>(out, ens.dim_state);
    put_le<std::uint64_t>(out, ens.dim_noise);
    put_le<std::uint64_t>(out, ens.steps());
    put_le<std::uint64_t>(out, ens.n_paths);
    put_le<std::uint64_t>(out, ens.seed);
    put_array(out, ens.increments);
    put_array(out, ens.states);
    if (!out) throw EnsembleFormatError("write to " + file.string() + " failed");
}

PathEnsemble read_ensemble(const std::filesystem::path& file, const Partition& partition) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw EnsembleFormatError("cannot open " + file.string());
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic)
        throw EnsembleFormatError(file.string() + " is not an ensemble dump (bad magic)");
    const auto m = get_le<std::uint64_t>(in);
    const auto d = get_le<std::uint64_t>(in);
    const auto n = get_le<std::uint64_t>(in);
    const auto p = get_le<std::uint64_t>(in);
    const auto seed = get_le<std::uint64_t>(in);
    if (m == 0 || d == 0 || p == 0) throw EnsembleFormatError("ensemble header has zero size");
    if (n != partition.steps())
        throw EnsembleFormatError("ensemble has " + std::to_string(n) +
                                  " steps but the partition has " +
                                  std::to_string(partition.steps()));
    PathEnsemble ens(partition, p, m, d, seed);
    get_array(in, ens.increments);
    get_array(in, ens.states);
    if (in.peek() != std::char_traits<char>::eof())
        throw EnsembleFormatError("trailing bytes after ensemble payload");
    return ens;
}

}  // namespace qgbsde

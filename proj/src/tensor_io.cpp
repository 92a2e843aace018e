#include "tsdcp/tensor_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace tsdcp {

namespace {

static_assert(sizeof(double) == 8);

void put_u64(std::ostream& os, std::uint64_t v)
{
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is)
{
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void put_f64(std::ostream& os, double d)
{
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    put_u64(os, v);
}

double get_f64(std::istream& is)
{
    std::uint64_t v = get_u64(is);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}

}  // namespace

void save_tensor(const Tensor4c& x, const std::string& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_tensor: cannot open " + path);
    for (int d = 0; d < 4; ++d) put_u64(os, static_cast<std::uint64_t>(x.dim(d)));
    for (Index i = 0; i < x.size(); ++i) {
        put_f64(os, x[i].real());
        put_f64(os, x[i].imag());
    }
    if (!os) throw std::runtime_error("save_tensor: write failed for " + path);
}

Tensor4c load_tensor(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_tensor: cannot open " + path);
    std::array<Index, 4> dims{};
    for (int d = 0; d < 4; ++d) dims[static_cast<std::size_t>(d)] = static_cast<Index>(get_u64(is));
    Tensor4c x(dims);
    for (Index i = 0; i < x.size(); ++i) {
        double re = get_f64(is);
        double im = get_f64(is);
        x[i] = Cplx(re, im);
    }
    if (!is) throw std::runtime_error("load_tensor: truncated file " + path);
    return x;
}

}  // namespace tsdcp

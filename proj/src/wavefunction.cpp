#include "semiprop/wavefunction.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace semiprop {

std::size_t WaveFunction::size() const {
  std::size_t n = 1;
  for (int c : counts) n *= static_cast<std::size_t>(c);
  return n;
}

double WaveFunction::cell_volume() const {
  double v = 1.0;
  for (int i = 0; i < dim; ++i) v *= spacing[i];
  return v;
}

Vec WaveFunction::point(std::size_t flat) const {
  Vec x(dim);
  for (int i = dim - 1; i >= 0; --i) {
    x[i] = origin[i] + spacing[i] * static_cast<double>(flat % counts[i]);
    flat /= counts[i];
  }
  return x;
}

void WaveFunction::validate() const {
  if (dim < 1) throw Error("WaveFunction: dim must be >= 1");
  if (hbar <= 0) throw Error("WaveFunction: hbar must be positive");
  if (origin.size() != dim || spacing.size() != dim ||
      static_cast<int>(counts.size()) != dim)
    throw Error("WaveFunction: metadata size mismatch");
  for (int i = 0; i < dim; ++i) {
    if (counts[i] < 2) throw Error("WaveFunction: counts must be >= 2 per axis");
    if (!(spacing[i] > 0)) throw Error("WaveFunction: spacing must be positive");
  }
  if (values.size() != size()) throw Error("WaveFunction: value count mismatch");
  for (const Complex& v : values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw Error("WaveFunction: non-finite value");
}

WaveFunction make_grid(int dim, double hbar, const Vec& origin, const Vec& spacing,
                       const std::vector<int>& counts) {
  WaveFunction psi;
  psi.dim = dim;
  psi.hbar = hbar;
  psi.origin = origin;
  psi.spacing = spacing;
  psi.counts = counts;
  psi.values.assign(psi.size(), Complex(0));
  psi.validate();
  return psi;
}

Complex inner_product(const WaveFunction& a, const WaveFunction& b) {
  if (a.dim != b.dim || a.counts != b.counts)
    throw Error("inner_product: incompatible grids");
  Complex sum(0);
  for (std::size_t i = 0; i < a.values.size(); ++i)
    sum += std::conj(a.values[i]) * b.values[i];
  return sum * a.cell_volume();
}

double l2_norm(const WaveFunction& psi) {
  double sum = 0;
  for (const Complex& v : psi.values) sum += std::norm(v);
  return std::sqrt(sum * psi.cell_volume());
}

double boundary_mass(const WaveFunction& psi) {
  double total = 0, edge = 0;
  for (std::size_t flat = 0; flat < psi.values.size(); ++flat) {
    const double m = std::norm(psi.values[flat]);
    total += m;
    std::size_t rest = flat;
    bool on_edge = false;
    for (int i = psi.dim - 1; i >= 0; --i) {
      const int idx = static_cast<int>(rest % psi.counts[i]);
      rest /= psi.counts[i];
      if (idx == 0 || idx == psi.counts[i] - 1) on_edge = true;
    }
    if (on_edge) edge += m;
  }
  return total > 0 ? edge / total : 0.0;
}

void save_wavefunction(const WaveFunction& psi, const std::string& path) {
  psi.validate();
  std::ofstream out(path);
  if (!out) throw Error("save_wavefunction: cannot open " + path);
  out.precision(17);
  out << psi.dim << " " << psi.hbar;
  for (int c : psi.counts) out << " " << c;
  for (int i = 0; i < psi.dim; ++i) out << " " << psi.origin[i];
  for (int i = 0; i < psi.dim; ++i) out << " " << psi.spacing[i];
  out << "\n";
  for (const Complex& v : psi.values) out << v.real() << " " << v.imag() << "\n";
}

WaveFunction load_wavefunction(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("load_wavefunction: cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw Error("load_wavefunction: empty file");
  std::istringstream hs(header);
  WaveFunction psi;
  if (!(hs >> psi.dim >> psi.hbar) || psi.dim < 1)
    throw Error("load_wavefunction: bad header");
  psi.counts.resize(psi.dim);
  psi.origin.resize(psi.dim);
  psi.spacing.resize(psi.dim);
  for (int i = 0; i < psi.dim; ++i)
    if (!(hs >> psi.counts[i])) throw Error("load_wavefunction: bad header");
  for (int i = 0; i < psi.dim; ++i)
    if (!(hs >> psi.origin[i])) throw Error("load_wavefunction: bad header");
  for (int i = 0; i < psi.dim; ++i)
    if (!(hs >> psi.spacing[i])) throw Error("load_wavefunction: bad header");
  psi.values.resize(psi.size());
  for (Complex& v : psi.values) {
    double re, im;
    if (!(in >> re >> im)) throw Error("load_wavefunction: truncated values");
    v = Complex(re, im);
  }
  psi.validate();
  return psi;
}

WaveFunction gaussian_packet(const WaveFunction& grid, const Vec& q0, const Vec& p0) {
  WaveFunction psi = grid;
  const double norm = std::pow(kPi * psi.hbar, -0.25 * psi.dim);
  for (std::size_t i = 0; i < psi.values.size(); ++i) {
    const Vec x = psi.point(i);
    const Vec d = x - q0;
    psi.values[i] =
        norm * std::exp(Complex(-d.squaredNorm() / (2 * psi.hbar), p0.dot(d) / psi.hbar));
  }
  return psi;
}

}  // namespace semiprop

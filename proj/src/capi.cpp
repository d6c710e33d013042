#include "semiprop.h"

#include <cstring>
#include <string>

#include "semiprop/experiment.hpp"
#include "semiprop/flow.hpp"
#include "semiprop/hamiltonian.hpp"
#include "semiprop/herman_kluk.hpp"
#include "semiprop/van_vleck.hpp"
#include "semiprop/wavefunction.hpp"

struct sp_model {
  semiprop::HamiltonianModel model;
};

struct sp_trajectory {
  semiprop::TrajectoryRecord traj;
};

struct sp_wavefunction {
  semiprop::WaveFunction psi;
};

namespace {

thread_local std::string g_last_error;

sp_status fail(sp_status code, const char* what) {
  g_last_error = what;
  return code;
}

template <typename Fn>
sp_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SP_OK;
  } catch (const semiprop::Error& e) {
    return fail(SP_ERR_NUMERICAL, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SP_ERR_UNKNOWN, "out of memory");
  } catch (const std::exception& e) {
    return fail(SP_ERR_UNKNOWN, e.what());
  }
}

semiprop::Vec to_vec(const double* data, int d) {
  return Eigen::Map<const semiprop::Vec>(data, d);
}

}  // namespace

extern "C" {

const char* sp_last_error(void) { return g_last_error.c_str(); }

sp_status sp_model_create(const char* name, const double* params, size_t nparams,
                          sp_model** out) {
  if (!name || !out || (nparams > 0 && !params))
    return fail(SP_ERR_INVALID_ARGUMENT, "sp_model_create: null argument");
  return guarded([&] {
    std::vector<double> p(params, params + nparams);
    *out = new sp_model{semiprop::builtin_model(name, p)};
  });
}

sp_status sp_model_dim(const sp_model* model, int* out) {
  if (!model || !out) return fail(SP_ERR_INVALID_ARGUMENT, "sp_model_dim: null argument");
  *out = model->model.dim;
  return SP_OK;
}

void sp_model_destroy(sp_model* model) { delete model; }

sp_status sp_trajectory_compute(const sp_model* model, const double* q, const double* p,
                                double t, double tol, sp_trajectory** out) {
  if (!model || !q || !p || !out)
    return fail(SP_ERR_INVALID_ARGUMENT, "sp_trajectory_compute: null argument");
  return guarded([&] {
    const int d = model->model.dim;
    const semiprop::PhasePoint z0(to_vec(q, d), to_vec(p, d));
    *out = new sp_trajectory{
        semiprop::integrate_flow(model->model, z0, t, tol > 0 ? tol : 1e-10)};
  });
}

sp_status sp_trajectory_action(const sp_trajectory* traj, double* out) {
  if (!traj || !out)
    return fail(SP_ERR_INVALID_ARGUMENT, "sp_trajectory_action: null argument");
  *out = traj->traj.action;
  return SP_OK;
}

sp_status sp_trajectory_endpoint(const sp_trajectory* traj, double* qt, double* pt) {
  if (!traj || !qt || !pt)
    return fail(SP_ERR_INVALID_ARGUMENT, "sp_trajectory_endpoint: null argument");
  const int d = traj->traj.dim();
  std::memcpy(qt, traj->traj.zt.q.data(), sizeof(double) * d);
  std::memcpy(pt, traj->traj.zt.p.data(), sizeof(double) * d);
  return SP_OK;
}

sp_status sp_trajectory_blocks(const sp_trajectory* traj, double* A, double* B, double* C,
                               double* D) {
  if (!traj || !A || !B || !C || !D)
    return fail(SP_ERR_INVALID_ARGUMENT, "sp_trajectory_blocks: null argument");
  const int d = traj->traj.dim();
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) {
      A[r * d + c] = traj->traj.A(r, c);
      B[r * d + c] = traj->traj.B(r, c);
      C[r * d + c] = traj->traj.C(r, c);
      D[r * d + c] = traj->traj.D(r, c);
    }
  return SP_OK;
}

sp_status sp_trajectory_prefactor(const sp_trajectory* traj, double* re, double* im) {
  if (!traj || !re || !im)
    return fail(SP_ERR_INVALID_ARGUMENT, "sp_trajectory_prefactor: null argument");
  *re = traj->traj.prefactor.real();
  *im = traj->traj.prefactor.imag();
  return SP_OK;
}

sp_status sp_trajectory_maslov(const sp_trajectory* traj, int* out) {
  if (!traj || !out)
    return fail(SP_ERR_INVALID_ARGUMENT, "sp_trajectory_maslov: null argument");
  return guarded([&] { *out = semiprop::maslov_index(traj->traj); });
}

void sp_trajectory_destroy(sp_trajectory* traj) { delete traj; }

sp_status sp_hk_kernel(const sp_model* model, double hbar, double t, const double* x,
                       const double* y, const double* q_lo, const double* q_hi,
                       const double* p_lo, const double* p_hi, double spacing, double* re,
                       double* im) {
  if (!model || !x || !y || !q_lo || !q_hi || !p_lo || !p_hi || !re || !im)
    return fail(SP_ERR_INVALID_ARGUMENT, "sp_hk_kernel: null argument");
  return guarded([&] {
    const int d = model->model.dim;
    const semiprop::PhaseSpaceQuadrature quad = semiprop::tensor_quadrature(
        to_vec(q_lo, d), to_vec(q_hi, d), to_vec(p_lo, d), to_vec(p_hi, d), spacing);
    const semiprop::Complex k =
        semiprop::hk_kernel(model->model, hbar, t, to_vec(x, d), to_vec(y, d), quad);
    *re = k.real();
    *im = k.imag();
  });
}

sp_status sp_vanvleck_kernel(const sp_model* model, double hbar, double t, const double* x,
                             const double* y, const double* p_lo, const double* p_hi,
                             int order, double* re, double* im, int* no_classical_path) {
  if (!model || !x || !y || !p_lo || !p_hi || !re || !im || !no_classical_path)
    return fail(SP_ERR_INVALID_ARGUMENT, "sp_vanvleck_kernel: null argument");
  return guarded([&] {
    const int d = model->model.dim;
    std::vector<semiprop::ClassicalBranch> branches = semiprop::find_branches(
        model->model, t, to_vec(x, d), to_vec(y, d), to_vec(p_lo, d), to_vec(p_hi, d));
    if (order > 1)
      for (semiprop::ClassicalBranch& br : branches)
        semiprop::compute_corrections(model->model, t, to_vec(x, d), br, order);
    const semiprop::VanVleckResult result =
        semiprop::vanvleck_kernel(branches, hbar, order, d);
    *re = result.value.real();
    *im = result.value.imag();
    *no_classical_path = result.no_classical_path ? 1 : 0;
  });
}

sp_status sp_wavefunction_load(const char* path, sp_wavefunction** out) {
  if (!path || !out)
    return fail(SP_ERR_INVALID_ARGUMENT, "sp_wavefunction_load: null argument");
  const sp_status s =
      guarded([&] { *out = new sp_wavefunction{semiprop::load_wavefunction(path)}; });
  return s == SP_ERR_NUMERICAL ? SP_ERR_IO : s;
}

sp_status sp_wavefunction_save(const sp_wavefunction* psi, const char* path) {
  if (!psi || !path)
    return fail(SP_ERR_INVALID_ARGUMENT, "sp_wavefunction_save: null argument");
  const sp_status s = guarded([&] { semiprop::save_wavefunction(psi->psi, path); });
  return s == SP_ERR_NUMERICAL ? SP_ERR_IO : s;
}

sp_status sp_wavefunction_dim(const sp_wavefunction* psi, int* dim, double* hbar) {
  if (!psi || !dim || !hbar)
    return fail(SP_ERR_INVALID_ARGUMENT, "sp_wavefunction_dim: null argument");
  *dim = psi->psi.dim;
  *hbar = psi->psi.hbar;
  return SP_OK;
}

sp_status sp_wavefunction_size(const sp_wavefunction* psi, size_t* out) {
  if (!psi || !out)
    return fail(SP_ERR_INVALID_ARGUMENT, "sp_wavefunction_size: null argument");
  *out = psi->psi.size();
  return SP_OK;
}

sp_status sp_wavefunction_values(const sp_wavefunction* psi, double* out) {
  if (!psi || !out)
    return fail(SP_ERR_INVALID_ARGUMENT, "sp_wavefunction_values: null argument");
  for (std::size_t i = 0; i < psi->psi.values.size(); ++i) {
    out[2 * i] = psi->psi.values[i].real();
    out[2 * i + 1] = psi->psi.values[i].imag();
  }
  return SP_OK;
}

void sp_wavefunction_destroy(sp_wavefunction* psi) { delete psi; }

sp_status sp_propagate_hk(const sp_model* model, const sp_wavefunction* psi0, double t,
                          const double* q_lo, const double* q_hi, const double* p_lo,
                          const double* p_hi, double spacing, int threads,
                          sp_wavefunction** out) {
  if (!model || !psi0 || !q_lo || !q_hi || !p_lo || !p_hi || !out)
    return fail(SP_ERR_INVALID_ARGUMENT, "sp_propagate_hk: null argument");
  return guarded([&] {
    const int d = model->model.dim;
    const semiprop::PhaseSpaceQuadrature quad = semiprop::tensor_quadrature(
        to_vec(q_lo, d), to_vec(q_hi, d), to_vec(p_lo, d), to_vec(p_hi, d), spacing);
    *out = new sp_wavefunction{
        semiprop::propagate_hk(model->model, psi0->psi, t, quad, nullptr, threads)};
  });
}

sp_status sp_run_command(const char* command, const char* config_path, const char* out_dir,
                         int threads, unsigned long seed, int* exit_code) {
  if (!command || !config_path || !out_dir || !exit_code)
    return fail(SP_ERR_INVALID_ARGUMENT, "sp_run_command: null argument");
  return guarded([&] {
    *exit_code = semiprop::run_command(command, config_path, out_dir, threads, seed);
  });
}

}  // extern "C"

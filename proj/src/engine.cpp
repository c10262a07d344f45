#include "tddsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <vector>

#include <Eigen/Cholesky>

#include "tddsim/scheduler.hpp"
#include "tddsim/traffic.hpp"

namespace tddsim {

double percentile(std::vector<double> values, double p) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    long rank = static_cast<long>(std::ceil(p * static_cast<double>(values.size())));
    rank = std::clamp(rank, 1L, static_cast<long>(values.size()));
    return values[static_cast<size_t>(rank - 1)];
}

namespace {

constexpr uint64_t kTagTraffic = 0x54524146ULL;  // per-UE arrival streams
constexpr uint64_t kTagDecode = 0x4445434fULL;   // per-transmission decode draws
constexpr uint64_t kTagArbiter = 0x41524254ULL;  // master tie-break stream

constexpr double kIntfFloorDbm = -120.0;
constexpr double kEstRateFloorBits = 21.0;  // one PRB at the lowest MCS

struct PacketInfo {
    double arrival_ms;
    long remaining_bits;
};

struct UeState {
    TxBuffer buffer;
    ArrivalStream arrivals;
    std::vector<HarqProcess> procs;
    std::unordered_map<long, PacketInfo> packets;
    long next_packet_id = 0;
    int cqi_db = 0;
    double post_acc = 0.0;  // linear post-SINR accumulation for next frame's CQI
    long post_cnt = 0;
    long delivered_bits = 0;  // measured window only
    // DL-attached users carry their own interference estimate.
    Eigen::LLT<CMat> llt;
    std::vector<double> w_acc;   // per-source power accumulated this frame
    std::vector<double> w_mean;  // last frame's per-PRB mean, feeds the covariance
    long obs_prbs = 0;           // reception-PRBs behind w_acc
};

struct CellState {
    int rfc = 0;
    RadioFrameConfig frame;
    int pending_rfc = -1;
    long pending_at = 0;
    CliFilterState filter;
    double theta_bs_dbm = kCliFloorDbm;
    double theta_ue_dbm = kCliFloorDbm;
    double theta_bs_acc = 0.0;  // linear mW over this frame's UL reception-PRBs
    long theta_bs_cnt = 0;
    double theta_ue_acc = 0.0;  // over this frame's DL reception-PRBs
    long theta_ue_cnt = 0;
    double est_rate_dl = kEstRateFloorBits;  // bits per matching slot
    double est_rate_ul = kEstRateFloorBits;
    Eigen::LLT<CMat> llt;
    std::vector<double> w_acc;
    std::vector<double> w_mean;
    long obs_prbs = 0;
};

// One transport block scheduled this tick.
struct Alloc {
    int ue;
    int proc;
    bool retx;
    int mcs;
    long tb;
    double p_prb_mw;
    std::vector<int> prbs;
};

struct Sim {
    const Scenario& sc;
    const RunOptions& opt;
    RadioParams rp;
    Codebook cb;
    RadioFrameConfig static_frame;
    Deployment dep;
    HarqParams hp;
    ThresholdQuantizer quant;
    CliFilterParams filter_params;
    PfState pf;
    Rng arb_rng;
    MetricsSink sink;

    int n_cells, n_ues, n_prbs, frame_slots;
    long warmup_ticks;
    double warmup_ms;
    double noise_bs_mw, noise_ue_mw;
    int xn_delay_slots;
    int psi_bits;

    std::vector<UeState> ues;
    std::vector<CellState> cells;
    std::vector<std::vector<int>> cell_ues;  // per cell, ascending ue ids
    std::vector<int> prb_offset;             // static per-cell PRB rotation

    // ---- per-frame caches -------------------------------------------------
    // Direction vectors fold sqrt(link gain) in and assume unit transmit
    // power; the quadratic detector forms below then scale linearly with the
    // actual per-PRB powers, so nothing here depends on scheduling.
    std::vector<CMat> h_serv;       // per UE: serving-link fading (tall for UL)
    std::vector<CVec> precoder;     // per UE: v (DL, nt-dim) or w (UL, mr-dim)
    std::vector<CVec> dir_at_bs;    // [cell * n_ues + src]
    std::vector<CVec> dir_at_ue;    // [victim * n_ues + src], DL victims only
    std::vector<double> z_bs;       // [victim * n_ues + src] = |a^H dir|^2 at the BS
    std::vector<double> z_ue;       //                        ... at the DL victim
    std::vector<double> tr_bs;      // squared norms of dir_at_bs (CLI measurement)
    std::vector<double> tr_ue;
    std::vector<double> a_norm2;    // per receiving UE: ||combiner||^2

    // ---- per-tick scratch ---------------------------------------------------
    std::vector<std::vector<Alloc>> allocs;   // per cell
    std::vector<std::vector<int>> occ;        // per cell: prb -> alloc index
    std::vector<long> delivered_ue;           // bits acked this tick
    std::vector<long> delivered_cell_dl, delivered_cell_ul;

    Sim(const Scenario& s, const RunOptions& o)
        : sc(s),
          opt(o),
          dep(make_deployment(s, s.seed)),
          pf(s.cells * (s.ues_dl_per_cell + s.ues_ul_per_cell) > 0
                 ? s.cells * (s.ues_dl_per_cell + s.ues_ul_per_cell)
                 : 1,
             s.pf_smoothing),
          arb_rng(mix_key(s.seed, kTagArbiter)) {
        rp.nt = s.bs_antennas;
        rp.mr = s.ue_antennas;
        rp.prbs = s.prbs;
        rp.scs_khz = s.scs_khz;
        rp.bs_power_dbm = s.bs_power_dbm;
        rp.ue_pmax_dbm = s.ue_pmax_dbm;
        rp.p0_dbm = s.p0_dbm;
        rp.alpha = s.alpha;
        rp.nf_ue_db = s.nf_ue_db;
        rp.nf_bs_db = s.nf_bs_db;
        rp.shadowing_sigma_db = s.shadowing_sigma_db;
        rp.cqi_backoff_db = s.cqi_backoff_db;

        cb = codebook_from(s);
        static_frame = rfc_from_pattern(s.static_pattern);

        hp = {s.harq_rtt_slots, s.harq_max_tx, s.harq_procs};
        quant = {s.cli_lo_dbm, s.cli_hi_dbm, s.hold_lo_ms, s.hold_hi_ms, cb.dss_len};
        filter_params = {s.rho_dbm, true};
        psi_bits = psi_field_bits(quant.levels);

        n_cells = s.cells;
        n_ues = dep.n_ues;
        n_prbs = s.prbs;
        frame_slots = s.frame_slots;
        warmup_ticks = static_cast<long>(s.resolved_warmup_frames()) * frame_slots;
        warmup_ms = warmup_ticks * s.tti_ms;
        noise_bs_mw = dbm_to_mw(rp.noise_prb_dbm(true));
        noise_ue_mw = dbm_to_mw(rp.noise_prb_dbm(false));
        xn_delay_slots = static_cast<int>(std::ceil(s.xn_delay_ms / s.tti_ms));

        sink.scheme = scheme_name(s.scheme);
        sink.seed = s.seed;
        sink.measured_ticks = s.ticks - warmup_ticks;
        sink.dist_clamps = dep.dist_clamps;

        cell_ues.assign(n_cells, {});
        for (int u = 0; u < n_ues; ++u) cell_ues[dep.topo.serving[u]].push_back(u);
        prb_offset.resize(n_cells);
        for (int c = 0; c < n_cells; ++c) prb_offset[c] = c * n_prbs / n_cells;

        const int start_rfc = select_rfc_slave(0, 0, cb);
        cells.assign(n_cells, {});
        for (int c = 0; c < n_cells; ++c) {
            cells[c].rfc = start_rfc;
            cells[c].frame =
                sc.scheme == Scheme::Static ? static_frame : cb.rfcs[start_rfc];
            cells[c].w_acc.assign(n_ues, 0.0);
            cells[c].w_mean.assign(n_ues, 0.0);
        }

        ues.reserve(n_ues);
        for (int u = 0; u < n_ues; ++u) {
            const bool dl = dep.dl_attached[u];
            const double lambda = dl ? s.lambda_dl_per_s : s.lambda_ul_per_s;
            UeState ue{TxBuffer{},
                       ArrivalStream(lambda, Rng(mix_key(s.seed, kTagTraffic,
                                                         static_cast<uint64_t>(u)))),
                       {},
                       {},
                       0,
                       0,
                       0.0,
                       0,
                       0,
                       Eigen::LLT<CMat>{},
                       {},
                       {},
                       0};
            ue.procs.assign(hp.procs_per_ue, HarqProcess{});
            const int c = dep.topo.serving[u];
            const double g = dep.topo.g_bs_ue(u, c);
            const double pl_db = -lin_to_db(g);
            const double p_mw = dl ? rp.bs_power_prb_mw() : dbm_to_mw(ul_power(pl_db, rp));
            const double noise = dl ? noise_ue_mw : noise_bs_mw;
            // Interference-free estimate with the array gain; refined after
            // one frame of real receptions.
            ue.cqi_db = static_cast<int>(std::clamp(
                std::lround(lin_to_db(p_mw * g * rp.nt / noise)), -30L, 50L));
            if (dl) {
                ue.w_acc.assign(n_ues, 0.0);
                ue.w_mean.assign(n_ues, 0.0);
            }
            ues.push_back(std::move(ue));
        }

        h_serv.resize(n_ues);
        precoder.resize(n_ues);
        dir_at_bs.assign(static_cast<size_t>(n_cells) * n_ues, CVec{});
        dir_at_ue.assign(static_cast<size_t>(n_ues) * n_ues, CVec{});
        z_bs.assign(static_cast<size_t>(n_ues) * n_ues, 0.0);
        z_ue.assign(static_cast<size_t>(n_ues) * n_ues, 0.0);
        tr_bs.assign(static_cast<size_t>(n_cells) * n_ues, 0.0);
        tr_ue.assign(static_cast<size_t>(n_ues) * n_ues, 0.0);
        a_norm2.assign(n_ues, 0.0);

        allocs.assign(n_cells, {});
        occ.assign(n_cells, std::vector<int>(n_prbs, -1));
        delivered_ue.assign(n_ues, 0);
        delivered_cell_dl.assign(n_cells, 0);
        delivered_cell_ul.assign(n_cells, 0);
    }

    // ---- frame boundary -----------------------------------------------------

    void finalize_frame_measurements() {
        for (int u = 0; u < n_ues; ++u) {
            UeState& ue = ues[u];
            if (ue.post_cnt > 0) {
                ue.cqi_db = static_cast<int>(std::clamp(
                    std::lround(lin_to_db(ue.post_acc / ue.post_cnt)), -30L, 50L));
                ue.post_acc = 0.0;
                ue.post_cnt = 0;
            }
        }
        // A cycle with no cross-link exposure produces no new sample, so the
        // previous estimate is held and aged toward the floor instead of being
        // reset: one clean frame is weak evidence that the interference
        // climate changed, several clean frames in a row are strong evidence.
        const double aging = sc.cli_aging_db;
        for (auto& cell : cells) {
            cell.theta_bs_dbm =
                cell.theta_bs_cnt > 0
                    ? std::max(kCliFloorDbm, mw_to_dbm(cell.theta_bs_acc / cell.theta_bs_cnt))
                    : std::max(kCliFloorDbm, cell.theta_bs_dbm - aging);
            cell.theta_ue_dbm =
                cell.theta_ue_cnt > 0
                    ? std::max(kCliFloorDbm, mw_to_dbm(cell.theta_ue_acc / cell.theta_ue_cnt))
                    : std::max(kCliFloorDbm, cell.theta_ue_dbm - aging);
            cell.theta_bs_acc = cell.theta_ue_acc = 0.0;
            cell.theta_bs_cnt = cell.theta_ue_cnt = 0;
        }
    }

    // Receivers re-estimate interference spatially within each fading block,
    // so only activity statistics survive the frame boundary: the mean power
    // each source contributed across last frame's reception PRBs. A victim
    // that heard nothing keeps its previous estimate.
    void snapshot_interference_weights() {
        for (auto& cell : cells) {
            if (cell.obs_prbs == 0) continue;
            for (int src = 0; src < n_ues; ++src)
                cell.w_mean[src] = cell.w_acc[src] / cell.obs_prbs;
            std::fill(cell.w_acc.begin(), cell.w_acc.end(), 0.0);
            cell.obs_prbs = 0;
        }
        for (int u = 0; u < n_ues; ++u) {
            UeState& ue = ues[u];
            if (!dep.dl_attached[u] || ue.obs_prbs == 0) continue;
            for (int src = 0; src < n_ues; ++src)
                ue.w_mean[src] = ue.w_acc[src] / ue.obs_prbs;
            std::fill(ue.w_acc.begin(), ue.w_acc.end(), 0.0);
            ue.obs_prbs = 0;
        }
    }

    void coordinate(long tick) {
        if (sc.scheme == Scheme::Static) return;

        std::vector<long> zdl(n_cells, 0), zul(n_cells, 0);
        for (int u = 0; u < n_ues; ++u) {
            const int c = dep.topo.serving[u];
            (dep.dl_attached[u] ? zdl[c] : zul[c]) += ues[u].buffer.total_bits();
        }

        std::vector<int> next(n_cells, -1);
        if (sc.scheme == Scheme::Nc || sc.scheme == Scheme::Cfc || n_cells == 1) {
            // Local decisions; a master without slaves also just applies its own.
            for (int c = 0; c < n_cells; ++c)
                next[c] = select_rfc_slave(zdl[c], zul[c], cb);
        } else {
            std::vector<XnRequest> reqs;
            for (int c = 1; c < n_cells; ++c) {
                CellState& cell = cells[c];
                int psi;
                if (sc.scheme == Scheme::Scc) {
                    psi = sc.scc_omega;
                } else {
                    update_cli_filter(cell.filter, cell.theta_bs_dbm, cell.theta_ue_dbm,
                                      zdl[c], zul[c], filter_params);
                    const double hold_ms = std::max(
                        hold(zdl[c], cell.frame, SlotDir::DL, cell.est_rate_dl, sc.tti_ms),
                        hold(zul[c], cell.frame, SlotDir::UL, cell.est_rate_ul, sc.tti_ms));
                    psi = sliding_threshold(cell.filter.cli_score_dbm, hold_ms, quant);
                }
                reqs.push_back({c, select_rfc_slave(zdl[c], zul[c], cb), psi});
            }
            const ArbitrationResult res = arbitrate_master(reqs, cb, arb_rng);
            next[0] = res.common_rfc;
            for (const XnGrant& g : res.grants) next[g.cell] = g.granted_rfc_index;
            account_round(sink.overhead, n_cells - 1, cb.index_bits,
                          sc.scheme == Scheme::Hfcs ? psi_bits : 0);
            if (opt.trace_xn) {
                std::ostringstream line;
                line << "tick=" << tick << " common=" << res.common_rfc;
                for (size_t i = 0; i < reqs.size(); ++i) {
                    const int granted = res.grants[i].granted_rfc_index;
                    line << " | cell=" << reqs[i].cell << " req=" << reqs[i].rfc_index
                         << " psi=" << reqs[i].psi << " grant=" << granted << " phi="
                         << slot_misalignment(cb.rfcs[granted], cb.rfcs[res.common_rfc]);
                }
                sink.xn_trace.push_back(line.str());
            }
        }

        const bool over_xn = sc.scheme == Scheme::Hfcs || sc.scheme == Scheme::Scc;
        for (int c = 0; c < n_cells; ++c) {
            if (next[c] == cells[c].rfc) {
                cells[c].pending_rfc = -1;
                continue;
            }
            if (over_xn && xn_delay_slots > 0) {
                cells[c].pending_rfc = next[c];
                cells[c].pending_at = tick + xn_delay_slots;
            } else {
                cells[c].rfc = next[c];
                cells[c].frame = cb.rfcs[next[c]];
                cells[c].pending_rfc = -1;
            }
        }
    }

    void rebuild_frame_cache(uint64_t frame) {
        const Topology& topo = dep.topo;
        const uint64_t seed = sc.seed;
        for (int u = 0; u < n_ues; ++u) {
            const int c = topo.serving[u];
            if (dep.dl_attached[u]) {
                h_serv[u] = draw_link_matrix(seed, frame, LinkKind::BsToUe, u, c,
                                             rp.mr, rp.nt);
            } else {
                h_serv[u] = draw_link_matrix(seed, frame, LinkKind::UeToBs, c, u,
                                             rp.nt, rp.mr);
            }
            precoder[u] = matched_precoder(h_serv[u]);
        }

        // Directions seen by every base station.
        for (int c = 0; c < n_cells; ++c) {
            std::vector<CMat> q(n_cells);
            for (int ci = 0; ci < n_cells; ++ci)
                if (ci != c)
                    q[ci] = draw_link_matrix(seed, frame, LinkKind::BsToBs, c, ci,
                                             rp.nt, rp.nt);
            for (int src = 0; src < n_ues; ++src) {
                CVec& dir = dir_at_bs[static_cast<size_t>(c) * n_ues + src];
                const int cs = topo.serving[src];
                if (dep.dl_attached[src]) {
                    if (cs == c) {
                        dir = CVec::Zero(rp.nt);  // a cell never jams its own slot
                    } else {
                        dir = std::sqrt(topo.g_bs_bs(c, cs)) * (q[cs] * precoder[src]);
                    }
                } else {
                    const CMat h = cs == c ? h_serv[src]
                                           : draw_link_matrix(seed, frame, LinkKind::UeToBs,
                                                              c, src, rp.nt, rp.mr);
                    dir = std::sqrt(topo.g_bs_ue(src, c)) * (h * precoder[src]);
                }
                tr_bs[static_cast<size_t>(c) * n_ues + src] = dir.squaredNorm();
            }
        }

        // Directions seen by every DL-attached user.
        for (int k = 0; k < n_ues; ++k) {
            if (!dep.dl_attached[k]) continue;
            const int ck = topo.serving[k];
            std::vector<CMat> h(n_cells);
            for (int ci = 0; ci < n_cells; ++ci)
                h[ci] = ci == ck ? h_serv[k]
                                 : draw_link_matrix(seed, frame, LinkKind::BsToUe, k, ci,
                                                    rp.mr, rp.nt);
            for (int src = 0; src < n_ues; ++src) {
                CVec& dir = dir_at_ue[static_cast<size_t>(k) * n_ues + src];
                const int cs = topo.serving[src];
                if (dep.dl_attached[src]) {
                    if (cs == ck && src != k) {
                        dir = CVec::Zero(rp.mr);  // same-cell users never share a PRB
                    } else {
                        dir = std::sqrt(topo.g_bs_ue(k, cs)) * (h[cs] * precoder[src]);
                    }
                } else {
                    const CMat g = draw_link_matrix(seed, frame, LinkKind::UeToUe, k, src,
                                                    rp.mr, rp.mr);
                    dir = std::sqrt(topo.g_ue_ue(k, src)) * (g * precoder[src]);
                }
                tr_ue[static_cast<size_t>(k) * n_ues + src] = dir.squaredNorm();
            }
        }

        // Interference covariance for the new fading draw: last frame's
        // per-source activity weights against this frame's directions. The
        // combiner can null interferers whose activity persists from frame to
        // frame and is blind to ones that just appeared — a receiver averages
        // the interference it has seen, it cannot anticipate it.
        for (int c = 0; c < n_cells; ++c) {
            CellState& cell = cells[c];
            CMat r = noise_bs_mw * CMat::Identity(rp.nt, rp.nt);
            for (int src = 0; src < n_ues; ++src) {
                const double w = cell.w_mean[src];
                if (w <= 0.0) continue;
                const CVec& u = dir_at_bs[static_cast<size_t>(c) * n_ues + src];
                r += w * (u * u.adjoint());
            }
            cell.llt.compute(r);
        }
        for (int k = 0; k < n_ues; ++k) {
            if (!dep.dl_attached[k]) continue;
            UeState& ue = ues[k];
            CMat r = noise_ue_mw * CMat::Identity(rp.mr, rp.mr);
            for (int src = 0; src < n_ues; ++src) {
                const double w = ue.w_mean[src];
                if (w <= 0.0) continue;
                const CVec& v = dir_at_ue[static_cast<size_t>(k) * n_ues + src];
                r += w * (v * v.adjoint());
            }
            ue.llt.compute(r);
        }

        // Combiner products for every receiver against its covariance.
        for (int u = 0; u < n_ues; ++u) {
            const int c = topo.serving[u];
            if (dep.dl_attached[u]) {
                const CVec& h0 = dir_at_ue[static_cast<size_t>(u) * n_ues + u];
                const CVec a = ues[u].llt.solve(h0);
                a_norm2[u] = a.squaredNorm();
                for (int src = 0; src < n_ues; ++src)
                    z_ue[static_cast<size_t>(u) * n_ues + src] =
                        std::norm(a.dot(dir_at_ue[static_cast<size_t>(u) * n_ues + src]));
            } else {
                const CVec& h0 = dir_at_bs[static_cast<size_t>(c) * n_ues + u];
                const CVec a = cells[c].llt.solve(h0);
                a_norm2[u] = a.squaredNorm();
                for (int src = 0; src < n_ues; ++src)
                    z_bs[static_cast<size_t>(u) * n_ues + src] =
                        std::norm(a.dot(dir_at_bs[static_cast<size_t>(c) * n_ues + src]));
            }
        }
    }

    // ---- per-tick phases ----------------------------------------------------

    void pump_arrivals(long tick) {
        const double now_ms = tick * sc.tti_ms;
        for (int u = 0; u < n_ues; ++u) {
            UeState& ue = ues[u];
            double t;
            while ((t = ue.arrivals.peek()) >= 0.0 && t <= now_ms) {
                const long id = ue.next_packet_id++;
                ue.buffer.push(id, sc.packet_bits);
                ue.packets.emplace(id, PacketInfo{t, sc.packet_bits});
                ++sink.packets_arrived;
                ue.arrivals.pop();
            }
        }
    }

    // Fixed-allocation probe: every matched user gets an equal contiguous PRB
    // share, independent of buffers, CQI and scheme, so runs differing only in
    // the scheme transmit the exact same instances.
    void schedule_cell_fixed(int c, bool want_dl) {
        auto& out = allocs[c];
        std::vector<int> matched;
        for (int u : cell_ues[c])
            if (dep.dl_attached[u] == static_cast<uint8_t>(want_dl)) matched.push_back(u);
        if (matched.empty()) return;
        const int share = n_prbs / static_cast<int>(matched.size());
        int next = 0;
        for (int u : matched) {
            const int n = next == 0 ? share + n_prbs % static_cast<int>(matched.size())
                                    : share;
            if (n == 0) break;
            Alloc a{u, 0, false, 2, tb_bits(2, n), 0.0, {}};
            for (int i = 0; i < n; ++i) a.prbs.push_back(next++);
            out.push_back(std::move(a));
        }
    }

    void schedule_cell(int c, long tick) {
        auto& out = allocs[c];
        out.clear();
        std::fill(occ[c].begin(), occ[c].end(), -1);
        const int slot = static_cast<int>(tick % frame_slots);
        const SlotDir dir = cells[c].frame.slots[slot];
        if (dir == SlotDir::Guard) return;
        const bool want_dl = dir == SlotDir::DL;
        const bool sss_slot = cells[c].frame.sss[slot] != 0;

        if (opt.fixed_alloc) {
            schedule_cell_fixed(c, want_dl);
            for (size_t i = 0; i < out.size(); ++i) {
                Alloc& a = out[i];
                if (want_dl) {
                    a.p_prb_mw = rp.bs_power_prb_mw();
                } else {
                    const double pl_db = -lin_to_db(dep.topo.g_bs_ue(a.ue, c));
                    const double cap_dbm =
                        rp.ue_pmax_dbm -
                        10.0 * std::log10(static_cast<double>(a.prbs.size()));
                    a.p_prb_mw = dbm_to_mw(std::min(ul_power(pl_db, rp), cap_dbm));
                }
                for (int prb : a.prbs) occ[c][prb] = static_cast<int>(i);
            }
            return;
        }

        int next_free = 0;
        // Pending retransmissions first; each needs its original block width.
        for (int u : cell_ues[c]) {
            if (dep.dl_attached[u] != want_dl) continue;
            for (int p = 0; p < hp.procs_per_ue; ++p) {
                HarqProcess& proc = ues[u].procs[p];
                if (proc.state != HarqProcess::State::PendingRetx ||
                    proc.retx_tick > tick || proc.n_prbs > n_prbs - next_free)
                    continue;
                proc.retransmit(tick);
                Alloc a{u, p, true, proc.mcs, proc.tb_size, 0.0, {}};
                for (int i = 0; i < proc.n_prbs; ++i) a.prbs.push_back(next_free++);
                out.push_back(std::move(a));
                if (sss_slot && sc.scheme == Scheme::Hfcs) ++sink.sss_retx_grants;
            }
        }

        // Fresh data on whatever is left.
        const int left = n_prbs - next_free;
        if (left > 0) {
            std::vector<SchedCandidate> cands;
            std::vector<int> cand_proc;
            for (int u : cell_ues[c]) {
                if (dep.dl_attached[u] != want_dl || !ues[u].buffer.has_queued()) continue;
                int idle = -1;
                for (int p = 0; p < hp.procs_per_ue && idle < 0; ++p)
                    if (ues[u].procs[p].state == HarqProcess::State::Idle) idle = p;
                if (idle < 0) continue;
                const int mcs = select_mcs(ues[u].cqi_db, rp.cqi_backoff_db);
                cands.push_back({u, ues[u].buffer.queued_bits(), mcs, tb_bits(mcs, 1),
                                 ues[u].cqi_db});
                cand_proc.push_back(idle);
            }
            if (!cands.empty()) {
                std::vector<int> pick(cands.size());
                for (size_t i = 0; i < pick.size(); ++i) pick[i] = static_cast<int>(i);
                if (sss_slot && sc.scheme == Scheme::Hfcs) pick = sss_admit(cands, left);

                std::vector<SchedCandidate> sub;
                std::vector<double> avg;
                for (int i : pick) {
                    sub.push_back(cands[i]);
                    avg.push_back(pf.avg(cands[i].ue));
                }
                const std::vector<int> owner = pf_allocate_flat(sub, avg, left);

                std::vector<std::vector<int>> won(sub.size());
                for (int prb = 0; prb < left; ++prb)
                    if (owner[prb] >= 0) won[owner[prb]].push_back(next_free + prb);
                for (size_t i = 0; i < sub.size(); ++i) {
                    if (won[i].empty()) continue;
                    const SchedCandidate& cand = sub[i];
                    const long tb = std::min(cand.demand_bits,
                                             static_cast<long>(won[i].size()) * cand.prb_bits);
                    auto frags = ues[cand.ue].buffer.take(tb);
                    const int proc = cand_proc[pick[i]];
                    ues[cand.ue].procs[proc].start(cand.mcs, tb,
                                                   static_cast<int>(won[i].size()),
                                                   std::move(frags));
                    out.push_back({cand.ue, proc, false, cand.mcs, tb, 0.0,
                                   std::move(won[i])});
                }
            }
        }

        if (out.empty()) {
            ++sink.idle_data_slots;
        } else {
            // Map the packed allocation onto physical PRBs with a static
            // per-cell rotation. Neighbouring schedulers all fill from the
            // bottom; without the offset two half-empty cells would overlap on
            // exactly the same PRBs every slot.
            const int off = prb_offset[c];
            for (Alloc& a : out)
                for (int& prb : a.prbs) prb = (prb + off) % n_prbs;
            for (size_t i = 0; i < out.size(); ++i) {
                Alloc& a = out[i];
                if (want_dl) {
                    a.p_prb_mw = rp.bs_power_prb_mw();
                } else {
                    const double pl_db = -lin_to_db(dep.topo.g_bs_ue(a.ue, c));
                    const double cap_dbm =
                        rp.ue_pmax_dbm - 10.0 * std::log10(static_cast<double>(a.prbs.size()));
                    a.p_prb_mw = dbm_to_mw(std::min(ul_power(pl_db, rp), cap_dbm));
                }
                for (int prb : a.prbs) occ[c][prb] = static_cast<int>(i);
            }
        }
    }

    void receive_cell(int c, long tick) {
        const int slot = static_cast<int>(tick % frame_slots);
        const SlotDir dir = cells[c].frame.slots[slot];
        if (dir == SlotDir::Guard) return;
        const bool want_dl = dir == SlotDir::DL;
        const bool cfc = sc.scheme == Scheme::Cfc;
        CellState& cell = cells[c];

        double intf_acc_mw = 0.0;
        long intf_prbs = 0;

        for (Alloc& a : allocs[c]) {
            UeState& ue = ues[a.ue];
            const size_t vrow = static_cast<size_t>(a.ue) * n_ues;
            const double* z = want_dl ? &z_ue[vrow] : &z_bs[vrow];
            const double noise = want_dl ? noise_ue_mw : noise_bs_mw;
            const double den_noise = noise * a_norm2[a.ue];
            auto& w_acc = want_dl ? ue.w_acc : cell.w_acc;

            const bool probe = opt.fixed_alloc;
            double post_sum = 0.0;
            for (int prb : a.prbs) {
                double den_int = 0.0;
                bool cross_hit = false;
                for (int c2 = 0; c2 < n_cells; ++c2) {
                    if (c2 == c) continue;
                    const int j2 = occ[c2][prb];
                    if (j2 < 0) continue;
                    const Alloc& src = allocs[c2][j2];
                    const bool cross = dep.dl_attached[src.ue] == !want_dl;
                    if (cross) {
                        if (cfc) continue;  // centralized fibre removes cross-link
                        if (probe) {
                        } else if (want_dl) {
                            cell.theta_ue_acc += src.p_prb_mw * tr_ue[vrow + src.ue];
                            cross_hit = true;
                        } else {
                            cell.theta_bs_acc +=
                                src.p_prb_mw * tr_bs[static_cast<size_t>(c) * n_ues + src.ue];
                            cross_hit = true;
                        }
                    }
                    den_int += src.p_prb_mw * z[src.ue];
                    if (!probe) w_acc[src.ue] += src.p_prb_mw;
                }
                post_sum += a.p_prb_mw * z[a.ue] / (den_noise + den_int);
                if (probe) continue;
                // Θ averages condition on exposure: only resource blocks that
                // actually carried opposite-direction energy enter the mean, so
                // one polluted slot reads at its true strength instead of being
                // washed out by the frame's clean blocks.
                if (want_dl) {
                    ++ue.obs_prbs;
                    if (cross_hit) ++cell.theta_ue_cnt;
                } else {
                    ++cell.obs_prbs;
                    if (cross_hit) ++cell.theta_bs_cnt;
                    intf_acc_mw += den_int / a_norm2[a.ue];
                    ++intf_prbs;
                }
            }
            const double tb_post = post_sum / static_cast<double>(a.prbs.size());
            if (probe) {
                sink.post_probe.push_back(tb_post);
                continue;
            }
            ue.post_acc += tb_post;
            ++ue.post_cnt;

            HarqProcess& proc = ue.procs[a.proc];
            proc.add_transmission_sinr(tb_post);
            const double u01 = keyed_uniform(
                mix_key(sc.seed, kTagDecode, static_cast<uint64_t>(tick),
                        static_cast<uint64_t>(a.ue), static_cast<uint64_t>(a.proc),
                        static_cast<uint64_t>(proc.transmissions)));
            const TbOutcome res =
                tb_success(lin_to_db(proc.acc_sinr), proc.mcs, proc.tb_size, u01);
            switch (harq_step(proc, res.ok, tick, hp)) {
                case HarqAction::Deliver: {
                    for (const TxBuffer::Taken& f : proc.carried) {
                        ue.buffer.deliver(f.bits);
                        auto it = ue.packets.find(f.packet_id);
                        it->second.remaining_bits -= f.bits;
                        if (it->second.remaining_bits == 0) {
                            ++sink.packets_delivered;
                            if (it->second.arrival_ms >= warmup_ms) {
                                const double lat =
                                    (tick + 1) * sc.tti_ms - it->second.arrival_ms;
                                sink.latency.push_back(
                                    {tick, c, a.ue, dep.dl_attached[a.ue] != 0, lat});
                                if (lat > sc.epsilon_ms) ++sink.latency_violations;
                            }
                            ue.packets.erase(it);
                        }
                    }
                    delivered_ue[a.ue] += proc.tb_size;
                    (want_dl ? delivered_cell_dl : delivered_cell_ul)[c] += proc.tb_size;
                    if (tick >= warmup_ticks) ue.delivered_bits += proc.tb_size;
                    proc.reset();
                    break;
                }
                case HarqAction::Retx:
                    break;
                case HarqAction::Fail:
                    ue.buffer.requeue_front(proc.carried);
                    ++sink.harq_failures;
                    proc.reset();
                    break;
            }
        }

        if (!want_dl && intf_prbs > 0 && tick >= warmup_ticks)
            sink.ul_interference.push_back(
                {tick, c,
                 std::max(kIntfFloorDbm, mw_to_dbm(intf_acc_mw / intf_prbs))});
    }

    void run() {
        const double tput_scale = 1000.0 / sc.tti_ms / 1e6;
        for (long tick = 0; tick < sc.ticks; ++tick) {
            if (tick % frame_slots == 0) {
                finalize_frame_measurements();
                snapshot_interference_weights();
                coordinate(tick);
                rebuild_frame_cache(static_cast<uint64_t>(tick / frame_slots));
            }
            for (CellState& cell : cells)
                if (cell.pending_rfc >= 0 && tick >= cell.pending_at) {
                    cell.rfc = cell.pending_rfc;
                    cell.frame = cb.rfcs[cell.rfc];
                    cell.pending_rfc = -1;
                }

            pump_arrivals(tick);
            std::fill(delivered_ue.begin(), delivered_ue.end(), 0);
            std::fill(delivered_cell_dl.begin(), delivered_cell_dl.end(), 0);
            std::fill(delivered_cell_ul.begin(), delivered_cell_ul.end(), 0);

            for (int c = 0; c < n_cells; ++c) schedule_cell(c, tick);
            for (int c = 0; c < n_cells; ++c) receive_cell(c, tick);

            for (int u = 0; u < n_ues; ++u)
                pf.update(u, static_cast<double>(delivered_ue[u]));

            const int slot = static_cast<int>(tick % frame_slots);
            for (int c = 0; c < n_cells; ++c) {
                const SlotDir dir = cells[c].frame.slots[slot];
                if (dir == SlotDir::Guard) continue;
                const bool dl = dir == SlotDir::DL;
                const long bits = (dl ? delivered_cell_dl : delivered_cell_ul)[c];
                auto& est = dl ? cells[c].est_rate_dl : cells[c].est_rate_ul;
                est = std::max(kEstRateFloorBits,
                               (1.0 - sc.est_rate_smoothing) * est +
                                   sc.est_rate_smoothing * static_cast<double>(bits));
                if (tick >= warmup_ticks && !opt.fixed_alloc)
                    sink.cell_tput.push_back({tick, c, dl, bits * tput_scale});
            }
        }

        if (opt.fixed_alloc) return;
        const double measured_s = sink.measured_ticks * sc.tti_ms / 1000.0;
        for (int u = 0; u < n_ues; ++u)
            sink.user_tput.push_back({u, dep.topo.serving[u], dep.dl_attached[u] != 0,
                                      measured_s > 0.0
                                          ? ues[u].delivered_bits / measured_s / 1e6
                                          : 0.0});
    }
};

}  // namespace

MetricsSink run_simulation(const Scenario& s, const RunOptions& opt) {
    validate_scenario(s);
    Sim sim(s, opt);
    sim.run();
    return std::move(sim.sink);
}

}  // namespace tddsim

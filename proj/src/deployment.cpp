#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tddsim/engine.hpp"

namespace tddsim {

namespace {

constexpr uint64_t kTagDeploy = 0x4445504c4f59ULL;  // "DEPLOY"

// Pathloss models are calibrated down to 1 m; shorter links are evaluated at
// the floor and counted so a pathological drop placement is visible.
constexpr double kMinLinkM = 1.0;

struct Cube {
    int x, y, z;
};

Point axial_to_plane(int q, int r, double isd_m) {
    return {isd_m * (q + 0.5 * r), isd_m * (std::sqrt(3.0) / 2.0) * r};
}

double dist_via(const Point& a, const Point& b, const std::vector<Point>& disp) {
    double best = std::hypot(a.x - b.x, a.y - b.y);
    for (const Point& d : disp)
        best = std::min(best, std::hypot(a.x - (b.x + d.x), a.y - (b.y + d.y)));
    return best;
}

}  // namespace

std::vector<Point> hex_positions(int n_cells, double isd_m) {
    std::vector<Point> out;
    out.reserve(n_cells);
    out.push_back({0.0, 0.0});
    static const Cube dirs[6] = {{1, -1, 0}, {1, 0, -1}, {0, 1, -1},
                                 {-1, 1, 0}, {-1, 0, 1}, {0, -1, 1}};
    for (int ring = 1; static_cast<int>(out.size()) < n_cells; ++ring) {
        // Start on the ring at dirs[4] * ring and walk its six edges.
        Cube c{dirs[4].x * ring, dirs[4].y * ring, dirs[4].z * ring};
        for (int side = 0; side < 6 && static_cast<int>(out.size()) < n_cells; ++side) {
            for (int step = 0; step < ring && static_cast<int>(out.size()) < n_cells;
                 ++step) {
                out.push_back(axial_to_plane(c.x, c.z, isd_m));
                c = {c.x + dirs[side].x, c.y + dirs[side].y, c.z + dirs[side].z};
            }
        }
    }
    return out;
}

std::vector<Point> wraparound_mirrors(int n_cells, double isd_m) {
    // A hex cluster tiles the plane only for sizes i^2 + i*j + j^2.
    int ti = -1, tj = -1;
    for (int i = 1; i * i <= n_cells && ti < 0; ++i)
        for (int j = 0; j <= i; ++j)
            if (i * i + i * j + j * j == n_cells) {
                ti = i;
                tj = j;
                break;
            }
    if (ti < 0)
        throw ConfigError("wraparound is not defined for " + std::to_string(n_cells) +
                          " cells (needs a hex cluster size: 1, 3, 4, 7, 12, 13, 19, ...)");
    std::vector<Point> out;
    int q = ti, r = tj;
    for (int k = 0; k < 6; ++k) {
        out.push_back(axial_to_plane(q, r, isd_m));
        const int nq = -r;  // rotate the translation vector by 60 degrees
        r = q + r;
        q = nq;
    }
    return out;
}

RadioFrameConfig rfc_from_pattern(const std::string& pattern) {
    RadioFrameConfig rfc;
    for (char c : pattern) {
        const SlotDir d = slot_from_char(c);
        rfc.slots.push_back(d);
        rfc.sss.push_back(0);
        rfc.dl_count += d == SlotDir::DL;
        rfc.ul_count += d == SlotDir::UL;
    }
    rfc.dss_dl = rfc.dl_count;
    rfc.dss_ul = rfc.ul_count;
    return rfc;
}

Codebook codebook_from(const Scenario& s) {
    std::vector<SssSlot> sss;
    for (int i = 0; i < s.sss_dl; ++i) sss.push_back({i, SlotDir::DL});
    for (int i = 0; i < s.sss_ul; ++i) sss.push_back({s.sss_dl + i, SlotDir::UL});
    return build_codebook(s.frame_slots, sss, s.dss_ratios, s.shifts_per_group,
                          s.codebook_target, s.guard_slots);
}

Deployment make_deployment(const Scenario& s, uint64_t seed) {
    Deployment d;
    d.n_cells = s.cells;
    d.n_ues = s.cells * (s.ues_dl_per_cell + s.ues_ul_per_cell);
    d.bs = hex_positions(s.cells, s.isd_m);
    std::vector<Point> mirrors;
    if (s.wraparound) mirrors = wraparound_mirrors(s.cells, s.isd_m);

    d.topo.n_cells = d.n_cells;
    d.topo.n_ues = d.n_ues;
    d.topo.nt = s.bs_antennas;
    d.topo.mr = s.ue_antennas;
    d.topo.serving.assign(d.n_ues, 0);
    d.dl_attached.assign(d.n_ues, 0);
    d.topo.gain_bs_ue.assign(static_cast<size_t>(d.n_ues) * d.n_cells, 0.0);
    d.topo.gain_ue_ue.assign(static_cast<size_t>(d.n_ues) * d.n_ues, 0.0);
    d.topo.gain_bs_bs.assign(static_cast<size_t>(d.n_cells) * d.n_cells, 0.0);
    d.ue.resize(d.n_ues);

    Rng rng(mix_key(seed, kTagDeploy));
    RadioParams rp;
    rp.pl_bs_ue = {128.1, 37.6};
    rp.pl_ue_ue = {98.0, 40.0};
    rp.pl_bs_bs = {100.0, 22.0};
    const double sigma = s.shadowing_sigma_db;

    auto clamped_km = [&d](double meters) {
        if (meters < kMinLinkM) {
            ++d.dist_clamps;
            meters = kMinLinkM;
        }
        return meters / 1000.0;
    };
    // Shadowed linear gain, capped at 0 dB: the models are far-field losses and
    // a lucky shadowing draw on a short link must not turn into amplification.
    auto gain = [&](const PathlossModel& pl, double d_km, double shadow_db) {
        return std::min(1.0, db_to_lin(-(pl.loss_db(d_km) + shadow_db)));
    };

    // Drop users uniformly in the serving cell's hexagon (apothem isd/2,
    // vertices toward the lattice gaps), then keep the draw only if the
    // shadowed attachment agrees with the intended cell.
    const double apothem = s.isd_m / 2.0;
    const double circum = s.isd_m / std::sqrt(3.0);
    const int k_cell = s.ues_dl_per_cell + s.ues_ul_per_cell;
    for (int c = 0; c < d.n_cells; ++c) {
        for (int k = 0; k < k_cell; ++k) {
            const int ue = c * k_cell + k;
            d.dl_attached[ue] = k < s.ues_dl_per_cell;
            d.topo.serving[ue] = c;
            bool placed = false;
            for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
                const double px = (2.0 * rng.next_uniform() - 1.0) * circum;
                const double py = (2.0 * rng.next_uniform() - 1.0) * circum;
                bool inside = std::hypot(px, py) >= s.min_dist_m;
                for (int e = 0; e < 3 && inside; ++e) {
                    const double ang = e * M_PI / 3.0;
                    inside = std::abs(px * std::cos(ang) + py * std::sin(ang)) <= apothem;
                }
                if (!inside) continue;
                const Point pos{d.bs[c].x + px, d.bs[c].y + py};
                std::vector<double> g(d.n_cells);
                int best = 0;
                for (int i = 0; i < d.n_cells; ++i) {
                    const double km = clamped_km(dist_via(pos, d.bs[i], mirrors));
                    g[i] = gain(rp.pl_bs_ue, km, sigma * rng.next_normal());
                    if (g[i] > g[best]) best = i;
                }
                if (best != c) continue;  // shadowing handed the user elsewhere
                d.ue[ue] = pos;
                for (int i = 0; i < d.n_cells; ++i)
                    d.topo.gain_bs_ue[static_cast<size_t>(ue) * d.n_cells + i] = g[i];
                placed = true;
            }
            if (!placed)
                throw SimulationError("could not place a user in cell " +
                                      std::to_string(c) + " attached to it");
        }
    }

    // Pairwise gains are symmetric: one distance, one shadowing draw per pair.
    for (int a = 0; a < d.n_ues; ++a)
        for (int b = a + 1; b < d.n_ues; ++b) {
            const double km = clamped_km(dist_via(d.ue[a], d.ue[b], mirrors));
            const double g = gain(rp.pl_ue_ue, km, sigma * rng.next_normal());
            d.topo.gain_ue_ue[static_cast<size_t>(a) * d.n_ues + b] = g;
            d.topo.gain_ue_ue[static_cast<size_t>(b) * d.n_ues + a] = g;
        }
    for (int a = 0; a < d.n_cells; ++a)
        for (int b = a + 1; b < d.n_cells; ++b) {
            const double km = clamped_km(dist_via(d.bs[a], d.bs[b], mirrors));
            const double g = gain(rp.pl_bs_bs, km, sigma * rng.next_normal());
            d.topo.gain_bs_bs[static_cast<size_t>(a) * d.n_cells + b] = g;
            d.topo.gain_bs_bs[static_cast<size_t>(b) * d.n_cells + a] = g;
        }
    return d;
}

}  // namespace tddsim

#include "reachrisk/frs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include "reachrisk/parallel.hpp"

namespace reachrisk {

double ProbabilityField::total() const {
  double s = oob;
  for (double p : probs) s += p;
  return s;
}

double ProbabilityField::at(std::size_t linear) const {
  const auto it = std::lower_bound(cells.begin(), cells.end(), static_cast<std::uint32_t>(linear));
  if (it == cells.end() || *it != linear) return 0.0;
  return probs[static_cast<std::size_t>(it - cells.begin())];
}

ProbabilityField ProbabilityField::point(const StateGrid& grid, const PointMassState& s) {
  ProbabilityField f;
  const CellIndex c = grid.index_of({s.y1, s.y2, s.v1, s.v2});
  if (c.valid()) {
    f.cells.push_back(static_cast<std::uint32_t>(c.value()));
    f.probs.push_back(1.0);
  } else {
    f.oob = 1.0;
  }
  return f;
}

namespace {

std::int32_t node_or_oob(const GridAxis& axis, double x) {
  const auto i = axis.nearest(x);
  return i ? static_cast<std::int32_t>(*i) : -1;
}

}  // namespace

FrsEngine::FrsEngine(StateGrid states, InputGrid inputs, InputConstraintConfig limits, FrsConfig cfg)
    : states_(std::move(states)), inputs_(std::move(inputs)), limits_(limits), cfg_(cfg) {
  if (!(cfg_.dt > 0.0)) throw std::invalid_argument("frs: dt must be positive");
  if (cfg_.threshold < 0.0) throw std::invalid_argument("frs: threshold must be non-negative");
  if (states_.size() > 0xffffffffu) throw std::invalid_argument("frs: grid too large");
  limits_.dt = cfg_.dt;
  validate_constraints(states_, inputs_, limits_);

  const GridAxis& y1 = states_.axis(0);
  const GridAxis& y2 = states_.axis(1);
  const GridAxis& v1 = states_.axis(2);
  const GridAxis& v2 = states_.axis(3);
  const GridAxis& a1 = inputs_.a1();
  const GridAxis& a2 = inputs_.a2();
  const double dt = cfg_.dt;

  // Same arithmetic as step_point_mass, per axis.
  auto advance = [dt](double y, double v, double a) {
    const PointMassState n = step_point_mass({y, 0.0, v, 0.0}, {a, 0.0}, dt);
    return std::pair{n.y1, n.v1};
  };
  next_v1_.resize(v1.count * a1.count);
  next_y1_.resize(y1.count * v1.count * a1.count);
  for (std::size_t iv = 0; iv < v1.count; ++iv) {
    for (std::size_t ia = 0; ia < a1.count; ++ia) {
      next_v1_[iv * a1.count + ia] = node_or_oob(v1, advance(0.0, v1.node(iv), a1.node(ia)).second);
      for (std::size_t iy = 0; iy < y1.count; ++iy) {
        const auto [ny, nv] = advance(y1.node(iy), v1.node(iv), a1.node(ia));
        next_y1_[(iy * v1.count + iv) * a1.count + ia] = node_or_oob(y1, ny);
      }
    }
  }
  next_v2_.resize(v2.count * a2.count);
  next_y2_.resize(y2.count * v2.count * a2.count);
  for (std::size_t iv = 0; iv < v2.count; ++iv) {
    for (std::size_t ia = 0; ia < a2.count; ++ia) {
      next_v2_[iv * a2.count + ia] = node_or_oob(v2, advance(0.0, v2.node(iv), a2.node(ia)).second);
      for (std::size_t iy = 0; iy < y2.count; ++iy) {
        const auto [ny, nv] = advance(y2.node(iy), v2.node(iv), a2.node(ia));
        next_y2_[(iy * v2.count + iv) * a2.count + ia] = node_or_oob(y2, ny);
      }
    }
  }
}

InputDistribution FrsEngine::input_distribution(std::span<const double> masses) const {
  if (masses.size() != inputs_.size()) {
    throw std::invalid_argument("input_distribution: mass vector does not match the input grid");
  }
  InputDistribution dist;
  const GridAxis& v1 = states_.axis(2);
  dist.by_v1.resize(v1.count);
  for (std::size_t iv = 0; iv < v1.count; ++iv) {
    const auto admissible = admissible_inputs(inputs_, {0.0, 0.0, v1.node(iv), 0.0}, limits_);
    std::vector<double> m;
    m.reserve(admissible.size());
    for (std::size_t id : admissible) m.push_back(masses[id]);
    const auto norm = normalize_inputs(m);
    dist.degenerate = dist.degenerate || norm.degenerate;
    auto& row = dist.by_v1[iv];
    for (std::size_t k = 0; k < admissible.size(); ++k) {
      row.push_back({static_cast<std::uint32_t>(admissible[k]), norm.probs[k]});
    }
  }
  return dist;
}

InputDistribution FrsEngine::input_distribution(const ForecastStep& step,
                                                ConfidenceMixture confidence) const {
  const auto masses = input_cell_masses(step, confidence, inputs_);
  return input_distribution(masses);
}

CellIndex FrsEngine::successor(std::size_t source, std::size_t input) const {
  const auto idx = states_.unravel(source);
  const std::size_t n_a1 = inputs_.a1().count;
  const std::size_t n_a2 = inputs_.a2().count;
  const std::size_t n_v1 = states_.axis(2).count;
  const std::size_t n_v2 = states_.axis(3).count;
  const std::size_t ia1 = input / n_a2;
  const std::size_t ia2 = input % n_a2;
  const std::int32_t y1 = next_y1_[(idx[0] * n_v1 + idx[2]) * n_a1 + ia1];
  const std::int32_t v1 = next_v1_[idx[2] * n_a1 + ia1];
  const std::int32_t y2 = next_y2_[(idx[1] * n_v2 + idx[3]) * n_a2 + ia2];
  const std::int32_t v2 = next_v2_[idx[3] * n_a2 + ia2];
  if (y1 < 0 || v1 < 0 || y2 < 0 || v2 < 0) return CellIndex::out_of_domain();
  return CellIndex(states_.linear({static_cast<std::size_t>(y1), static_cast<std::size_t>(y2),
                                   static_cast<std::size_t>(v1), static_cast<std::size_t>(v2)}));
}

ProbabilityField FrsEngine::step(const ProbabilityField& field, const InputDistribution& dist) const {
  if (dist.by_v1.size() != states_.axis(2).count) {
    throw std::invalid_argument("frs step: input distribution does not match the grid");
  }
  using Deposit = std::pair<std::uint32_t, double>;
  const std::size_t workers = std::max<std::size_t>(1, cfg_.workers);
  const std::size_t n_cells = states_.size();
  auto partition_of = [&](std::uint32_t target) {
    return static_cast<std::size_t>(static_cast<std::uint64_t>(target) * workers / n_cells);
  };

  ProbabilityField out;
  out.step = field.step + 1;
  out.oob = field.oob;
  out.pruned = field.pruned;

  // Pruning is decided sequentially so the sum order never depends on workers.
  std::vector<std::size_t> sources;
  sources.reserve(field.cells.size());
  for (std::size_t k = 0; k < field.cells.size(); ++k) {
    if (field.probs[k] > cfg_.threshold) {
      sources.push_back(k);
    } else {
      out.oob += field.probs[k];
      out.pruned += field.probs[k];
    }
  }

  const std::size_t chunks = std::max<std::size_t>(1, std::min(workers, sources.size()));
  std::vector<std::vector<std::vector<Deposit>>> buckets(chunks,
                                                         std::vector<std::vector<Deposit>>(workers));
  std::vector<std::vector<double>> oob_deposits(chunks);

  const auto& strides = states_.strides();
  const std::size_t n_a1 = inputs_.a1().count;
  const std::size_t n_a2 = inputs_.a2().count;
  const std::size_t n_v1 = states_.axis(2).count;
  const std::size_t n_v2 = states_.axis(3).count;

  parallel_chunks(sources.size(), chunks, [&](std::size_t c, std::size_t b, std::size_t e) {
    auto& my = buckets[c];
    auto& my_oob = oob_deposits[c];
    for (std::size_t s = b; s < e; ++s) {
      const std::size_t k = sources[s];
      const double p = field.probs[k];
      const auto idx = states_.unravel(field.cells[k]);
      const std::int32_t* y1_row = &next_y1_[(idx[0] * n_v1 + idx[2]) * n_a1];
      const std::int32_t* v1_row = &next_v1_[idx[2] * n_a1];
      const std::int32_t* y2_row = &next_y2_[(idx[1] * n_v2 + idx[3]) * n_a2];
      const std::int32_t* v2_row = &next_v2_[idx[3] * n_a2];
      for (const auto& entry : dist.by_v1[idx[2]]) {
        const double mass = p * entry.prob;
        const std::size_t ia1 = entry.input / n_a2;
        const std::size_t ia2 = entry.input % n_a2;
        const std::int32_t y1 = y1_row[ia1], v1 = v1_row[ia1], y2 = y2_row[ia2], v2 = v2_row[ia2];
        if (y1 < 0 || v1 < 0 || y2 < 0 || v2 < 0) {
          my_oob.push_back(mass);
          continue;
        }
        const auto target = static_cast<std::uint32_t>(
            static_cast<std::size_t>(y1) * strides[0] + static_cast<std::size_t>(y2) * strides[1] +
            static_cast<std::size_t>(v1) * strides[2] + static_cast<std::size_t>(v2));
        my[partition_of(target)].emplace_back(target, mass);
      }
    }
  });

  // Each target partition sums its deposits in chunk order, which is the
  // canonical (source, input) order for any worker count.
  std::vector<double> dense(n_cells, 0.0);
  std::vector<std::vector<std::uint32_t>> part_cells(workers);
  std::vector<std::vector<double>> part_probs(workers);
  parallel_chunks(workers, workers, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t w = b; w < e; ++w) {
      std::vector<std::uint32_t> touched;
      for (std::size_t c = 0; c < chunks; ++c) {
        for (const auto& [target, mass] : buckets[c][w]) {
          if (dense[target] == 0.0) touched.push_back(target);
          dense[target] += mass;
        }
      }
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      auto& cells = part_cells[w];
      auto& probs = part_probs[w];
      cells.reserve(touched.size());
      probs.reserve(touched.size());
      for (std::uint32_t t : touched) {
        if (dense[t] > 0.0) {
          cells.push_back(t);
          probs.push_back(dense[t]);
        }
      }
    }
  });

  for (std::size_t c = 0; c < chunks; ++c) {
    for (double m : oob_deposits[c]) out.oob += m;
  }
  std::size_t total = 0;
  for (const auto& pc : part_cells) total += pc.size();
  out.cells.reserve(total);
  out.probs.reserve(total);
  for (std::size_t w = 0; w < workers; ++w) {
    out.cells.insert(out.cells.end(), part_cells[w].begin(), part_cells[w].end());
    out.probs.insert(out.probs.end(), part_probs[w].begin(), part_probs[w].end());
  }
  return out;
}

std::vector<ProbabilityField> FrsEngine::propagate(const ProbabilityField& initial,
                                                   const AccelerationForecast& forecast,
                                                   const BeliefVector& belief) const {
  belief.validate();
  if (std::abs(forecast.dt - cfg_.dt) > 1e-12) {
    throw std::invalid_argument("frs propagate: forecast dt differs from the engine dt");
  }
  const ConfidenceMixture confidence{belief.betas, belief.probs};
  std::vector<ProbabilityField> fields;
  fields.reserve(forecast.size());
  const ProbabilityField* current = &initial;
  for (const auto& step : forecast.steps) {
    fields.push_back(this->step(*current, input_distribution(step, confidence)));
    current = &fields.back();
  }
  return fields;
}

OccupancySet::OccupancySet(const StateGrid& grid, std::size_t step, double ego_y1, double ego_y2,
                           const VehicleGeometry& ego, const VehicleGeometry& sur)
    : step_(step) {
  constexpr double eps = 1e-9;
  const double half_l = 0.5 * (ego.length + sur.length);
  const double half_w = 0.5 * (ego.width + sur.width);
  auto range = [&](const GridAxis& axis, double centre, double half, std::size_t& lo,
                   std::size_t& hi) {
    bool any = false;
    for (std::size_t i = 0; i < axis.count; ++i) {
      if (std::abs(axis.node(i) - centre) <= half + eps) {
        if (!any) lo = i;
        hi = i;
        any = true;
      }
    }
    return any;
  };
  const bool r1 = range(grid.axis(0), ego_y1, half_l, y1_lo_, y1_hi_);
  const bool r2 = range(grid.axis(1), ego_y2, half_w, y2_lo_, y2_hi_);
  empty_ = !(r1 && r2);
}

bool OccupancySet::contains_position(std::size_t i1, std::size_t i2) const {
  return !empty_ && i1 >= y1_lo_ && i1 <= y1_hi_ && i2 >= y2_lo_ && i2 <= y2_hi_;
}

bool OccupancySet::contains(const StateGrid& grid, std::size_t linear) const {
  const auto idx = grid.unravel(linear);
  return contains_position(idx[0], idx[1]);
}

std::vector<std::size_t> OccupancySet::cells(const StateGrid& grid) const {
  std::vector<std::size_t> out;
  if (empty_) return out;
  for (std::size_t i1 = y1_lo_; i1 <= y1_hi_; ++i1) {
    for (std::size_t i2 = y2_lo_; i2 <= y2_hi_; ++i2) {
      for (std::size_t j = 0; j < grid.axis(2).count; ++j) {
        for (std::size_t k = 0; k < grid.axis(3).count; ++k) {
          out.push_back(grid.linear({i1, i2, j, k}));
        }
      }
    }
  }
  return out;
}

std::size_t OccupancySet::size(const StateGrid& grid) const {
  if (empty_) return 0;
  return (y1_hi_ - y1_lo_ + 1) * (y2_hi_ - y2_lo_ + 1) * grid.axis(2).count * grid.axis(3).count;
}

double occupancy_mass(const StateGrid& grid, const ProbabilityField& field, const OccupancySet& occ) {
  double s = 0.0;
  for (std::size_t k = 0; k < field.cells.size(); ++k) {
    if (occ.contains(grid, field.cells[k])) s += field.probs[k];
  }
  return s;
}

CollisionResult collision_probability(std::span<const double> step_sums) {
  CollisionResult out;
  double survive = 1.0;
  for (double s : step_sums) {
    if (s > 1.0) {
      out.clamped = true;
      s = 1.0;
    }
    s = std::max(0.0, s);
    out.step_sums.push_back(s);
    survive *= 1.0 - s;
  }
  out.probability = 1.0 - survive;
  return out;
}

CollisionResult collision_probability(const StateGrid& grid, std::span<const ProbabilityField> fields,
                                      std::span<const OccupancySet> occupancy) {
  if (fields.size() != occupancy.size()) {
    throw std::invalid_argument("collision_probability: fields and occupancy sets differ in count");
  }
  std::vector<double> sums;
  sums.reserve(fields.size());
  for (std::size_t k = 0; k < fields.size(); ++k) {
    sums.push_back(occupancy_mass(grid, fields[k], occupancy[k]));
  }
  return collision_probability(sums);
}

double position_accuracy(const StateGrid& grid, const ProbabilityField& field,
                         const PointMassState& actual) {
  const auto i1 = grid.axis(0).nearest(actual.y1);
  const auto i2 = grid.axis(1).nearest(actual.y2);
  if (!i1 || !i2) return 0.0;
  auto near = [&](std::size_t a, std::size_t b) {
    const auto d1 = a > *i1 ? a - *i1 : *i1 - a;
    const auto d2 = b > *i2 ? b - *i2 : *i2 - b;
    return d1 + d2 <= 1;
  };
  double s = 0.0;
  for (std::size_t k = 0; k < field.cells.size(); ++k) {
    const auto idx = grid.unravel(field.cells[k]);
    if (near(idx[0], idx[1])) s += field.probs[k];
  }
  return std::min(s, 1.0);
}

void write_field_csv(std::ostream& os, const StateGrid& grid, std::span<const ProbabilityField> fields,
                     double min_prob) {
  os << "step,y1,y2,probability\n";
  os.precision(10);
  for (const auto& field : fields) {
    std::map<std::pair<std::size_t, std::size_t>, double> marginal;
    for (std::size_t k = 0; k < field.cells.size(); ++k) {
      const auto idx = grid.unravel(field.cells[k]);
      marginal[{idx[0], idx[1]}] += field.probs[k];
    }
    for (const auto& [pos, p] : marginal) {
      if (!(p > min_prob)) continue;
      os << field.step << ',' << grid.axis(0).node(pos.first) << ',' << grid.axis(1).node(pos.second)
         << ',' << p << '\n';
    }
  }
}

}  // namespace reachrisk

// Copyright (C) 2026 epichart contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "epichart/population/spatial_grid.hpp"
#include "epichart/statechart/chart.hpp"

namespace epichart {

enum class Sex : uint8_t { kFemale = 0, kMale = 1 };

// Vaccine attitude classes used by the varicella adherence model.
enum class Attitude : uint8_t { kAcceptor = 0, kHesitant = 1, kRejecter = 2 };

using HouseholdId = uint32_t;
inline constexpr HouseholdId kNoHousehold = 0xffffffffu;

struct PersonAgent {
  AgentId id = kNoAgent;
  Sex sex = Sex::kFemale;
  bool alive = true;
  Attitude attitude = Attitude::kAcceptor;  // varicella: categorical class
  float acceptance = 1.0f;                  // pertussis: u in [0,1]
  uint8_t parity = 0;                       // live births so far
  double birth_time = 0.0;
  double death_time = std::numeric_limits<double>::quiet_NaN();
  Vec2 pos;
  HouseholdId household = kNoHousehold;
  int32_t school = -1;  // enrolled school id, -1 when not enrolled
  AgentId mother = kNoAgent;
  std::vector<ChartInstance> charts;

  double age(double now) const { return now - birth_time; }
};

struct Household {
  HouseholdId id = kNoHousehold;
  Vec2 pos;
  std::vector<AgentId> members;
  // Founding adults; vaccine-compliance decisions for children use them.
  std::array<AgentId, 2> parents{kNoAgent, kNoAgent};
};

struct School {
  int32_t id = -1;
  std::vector<AgentId> enrolled;
};

// Agent/household/school store plus exact population accounting. Ids are
// indices and are never reused; dead agents stay in place with alive=false
// and are withdrawn from the spatial index and all groups.
class Population {
 public:
  void configure_region(double width, double height, double cell_size) {
    spatial_.reset(width, height, cell_size);
  }

  PersonAgent& agent(AgentId id) { return agents_[id]; }
  const PersonAgent& agent(AgentId id) const { return agents_[id]; }
  std::size_t size() const { return agents_.size(); }

  Household& household(HouseholdId id) { return households_[id]; }
  const Household& household(HouseholdId id) const { return households_[id]; }
  std::size_t household_count() const { return households_.size(); }

  School& school(int32_t id) { return schools_[id]; }
  const School& school(int32_t id) const { return schools_[id]; }
  std::size_t school_count() const { return schools_.size(); }
  int32_t add_school() {
    schools_.push_back(School{static_cast<int32_t>(schools_.size()), {}});
    return schools_.back().id;
  }

  SpatialIndex& spatial() { return spatial_; }
  const SpatialIndex& spatial() const { return spatial_; }

  uint64_t initial_count() const { return initial_; }
  uint64_t birth_count() const { return births_; }
  uint64_t death_count() const { return deaths_; }
  uint64_t alive_count() const { return alive_; }

  HouseholdId create_household(Vec2 pos) {
    HouseholdId id = static_cast<HouseholdId>(households_.size());
    households_.push_back(Household{id, pos, {}, {kNoAgent, kNoAgent}});
    return id;
  }

  // Creates an agent already placed in the world. `initial` distinguishes
  // the synthetic starting population from live births for the accounting
  // identity alive == initial + births - deaths.
  AgentId add_agent(Sex sex, double birth_time, Vec2 pos, HouseholdId hh,
                    bool initial) {
    AgentId id = static_cast<AgentId>(agents_.size());
    PersonAgent p;
    p.id = id;
    p.sex = sex;
    p.birth_time = birth_time;
    p.pos = pos;
    p.household = hh;
    agents_.push_back(std::move(p));
    if (hh != kNoHousehold) households_[hh].members.push_back(id);
    spatial_.insert(id, pos);
    ++alive_;
    if (initial) {
      ++initial_;
    } else {
      ++births_;
    }
    return id;
  }

  void mark_dead(AgentId id, double t) {
    PersonAgent& p = agents_[id];
    if (!p.alive) throw std::logic_error("mark_dead: agent already dead");
    p.alive = false;
    p.death_time = t;
    spatial_.remove(id, p.pos);
    detach_household(id);
    withdraw_school(id);
    --alive_;
    ++deaths_;
  }

  void move_agent(AgentId id, Vec2 to) {
    PersonAgent& p = agents_[id];
    spatial_.move(id, p.pos, to);
    p.pos = to;
  }

  void transfer_household(AgentId id, HouseholdId to) {
    detach_household(id);
    agents_[id].household = to;
    if (to != kNoHousehold) households_[to].members.push_back(id);
  }

  void enroll_school(AgentId id, int32_t school_id) {
    agents_[id].school = school_id;
    schools_[school_id].enrolled.push_back(id);
  }

  void withdraw_school(AgentId id) {
    PersonAgent& p = agents_[id];
    if (p.school < 0) return;
    auto& roll = schools_[p.school].enrolled;
    roll.erase(std::find(roll.begin(), roll.end(), id));
    p.school = -1;
  }

  std::vector<AgentId> neighbors_within(Vec2 center, double radius,
                                        AgentId self) const {
    std::vector<AgentId> out;
    spatial_.neighbors_within(
        center, radius, self, [this](AgentId a) { return agents_[a].pos; },
        out);
    return out;
  }

  void neighbors_within(Vec2 center, double radius, AgentId self,
                        std::vector<AgentId>& out) const {
    out.clear();
    spatial_.neighbors_within(
        center, radius, self, [this](AgentId a) { return agents_[a].pos; },
        out);
  }

  // Debug/test snapshot: one row per agent.
  void write_snapshot(std::ostream& os, double now) const {
    os << "id,alive,age,sex,household,school,mother,attitude,acceptance,"
          "parity,x,y\n";
    for (const auto& p : agents_) {
      os << p.id << ',' << (p.alive ? 1 : 0) << ',' << p.age(now) << ','
         << (p.sex == Sex::kFemale ? 'F' : 'M') << ',';
      if (p.household == kNoHousehold) {
        os << -1;
      } else {
        os << p.household;
      }
      os << ',' << p.school << ',';
      if (p.mother == kNoAgent) {
        os << -1;
      } else {
        os << p.mother;
      }
      os << ',' << static_cast<int>(p.attitude) << ',' << p.acceptance << ','
         << static_cast<int>(p.parity) << ',' << p.pos.x << ',' << p.pos.y
         << '\n';
    }
  }

 private:
  void detach_household(AgentId id) {
    PersonAgent& p = agents_[id];
    if (p.household == kNoHousehold) return;
    auto& members = households_[p.household].members;
    members.erase(std::find(members.begin(), members.end(), id));
    p.household = kNoHousehold;
  }

  std::vector<PersonAgent> agents_;
  std::vector<Household> households_;
  std::vector<School> schools_;
  SpatialIndex spatial_;
  uint64_t initial_ = 0;
  uint64_t births_ = 0;
  uint64_t deaths_ = 0;
  uint64_t alive_ = 0;
};

}  // namespace epichart

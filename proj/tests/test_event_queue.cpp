// Copyright (C) 2026 epichart contributors
// SPDX-License-Identifier: Apache-2.0

#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "epichart/core/event_queue.hpp"

using epichart::Event;
using epichart::EventKind;
using epichart::EventQueue;

namespace {

Event at(double t, uint16_t tag = 0) {
  Event e;
  e.time = t;
  e.kind = EventKind::kTransition;
  e.transition = tag;
  return e;
}

}  // namespace

TEST_CASE("events pop in time order") {
  EventQueue q;
  q.schedule(at(3.0));
  q.schedule(at(1.0));
  q.schedule(at(2.0));
  REQUIRE(q.pop().time == 1.0);
  REQUIRE(q.pop().time == 2.0);
  REQUIRE(q.pop().time == 3.0);
  REQUIRE(q.empty());
}

TEST_CASE("simultaneous events pop in insertion order") {
  EventQueue q;
  for (uint16_t i = 0; i < 50; ++i) q.schedule(at(5.0, i));
  for (uint16_t i = 0; i < 50; ++i) {
    Event e = q.pop();
    REQUIRE(e.transition == i);
  }
}

TEST_CASE("tie-break survives interleaved earlier events") {
  EventQueue q;
  q.schedule(at(2.0, 10));
  q.schedule(at(1.0, 0));
  q.schedule(at(2.0, 11));
  q.schedule(at(0.5, 1));
  q.schedule(at(2.0, 12));
  REQUIRE(q.pop().transition == 1);
  REQUIRE(q.pop().transition == 0);
  REQUIRE(q.pop().transition == 10);
  REQUIRE(q.pop().transition == 11);
  REQUIRE(q.pop().transition == 12);
}

TEST_CASE("schedule during drain keeps ordering") {
  EventQueue q;
  q.schedule(at(1.0));
  q.schedule(at(4.0));
  REQUIRE(q.pop().time == 1.0);
  q.schedule(at(2.0));
  q.schedule(at(3.0));
  std::vector<double> times;
  while (!q.empty()) times.push_back(q.pop().time);
  REQUIRE(times == std::vector<double>{2.0, 3.0, 4.0});
}

TEST_CASE("size and top report the pending set") {
  EventQueue q;
  REQUIRE(q.empty());
  REQUIRE(q.size() == 0);
  q.schedule(at(9.0));
  q.schedule(at(7.0));
  REQUIRE(q.size() == 2);
  REQUIRE(q.top().time == 7.0);
  REQUIRE(q.size() == 2);  // top() must not consume
  q.clear();
  REQUIRE(q.empty());
}

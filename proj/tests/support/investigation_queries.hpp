// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#pragma once

// Investigation queries used across the suites. Obfuscated literals are
// filled with fixed placeholders: the db server is agent 4, the attacker is
// 203.0.113.129 and the incident day is 04/12/2018.
namespace aiql::testdata {

inline constexpr const char* kExfiltrationQuery = R"(// time window
(at "04/12/2018")
agentid = 4 // db server
proc p1["%cmd.exe"] start proc p2["%osql.exe"] as evt1
proc p3["%osql.exe"] write file f1["%backup1.dmp"] as evt2
proc p4["%sbblv.exe"] read file f1 as evt3
proc p4 read || write ip i1[dstip="203.0.113.129"] as evt4
with evt1 before evt2, evt2 before evt3, evt3 before evt4
return distinct p1, p2, p3, f1, p4, i1
)";

inline constexpr const char* kRamificationQuery = R"((at "04/12/2018")
forward: file f1["%info_stealer%"]
  <-[read] proc p2["%apache%"]
  ->[connect] proc p3[agentid = 2]
  ->[write] file f2["%info_stealer%"]
return f1, p2, p3, f2
)";

inline constexpr const char* kSpikeQuery = R"((at "04/12/2018")
agentid = 4
window = 1 min, step = 10 sec
proc p write ip i[dstip="203.0.113.129"] as evt
return p, avg(evt.amount) as amt
group by p
having (amt > 2 * (amt + amt[1] + amt[2]) / 3)
)";

}  // namespace aiql::testdata

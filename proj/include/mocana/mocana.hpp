#pragma once

// Umbrella header for the whole library.

#include "mocana/agent.hpp"
#include "mocana/agents.hpp"
#include "mocana/core.hpp"
#include "mocana/domain_io.hpp"
#include "mocana/gp.hpp"
#include "mocana/mcts.hpp"
#include "mocana/opponent_model.hpp"
#include "mocana/rng.hpp"
#include "mocana/session.hpp"
#include "mocana/tournament.hpp"

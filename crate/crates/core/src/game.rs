//! Finite normal-form games, mixed strategies and exact expected utility.
//!
//! Actions are plain indices in `0..m_i`; a joint action is a slice with one
//! index per player. Dense payoff tensors are stored row-major over joint
//! actions with player 0 as the most significant axis.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::congestion::CongestionGame;
use crate::error::{Error, Result};

/// Largest joint action space the enumeration oracles will walk.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

/// Tolerance for simplex membership and potential-function checks.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// Number of joint pure actions, saturating on overflow.
pub fn joint_space_size(action_counts: &[usize]) -> u128 {
    action_counts
        .iter()
        .fold(1u128, |acc, &m| acc.saturating_mul(m as u128))
}

pub(crate) fn ensure_enumerable(action_counts: &[usize]) -> Result<()> {
    let outcomes = joint_space_size(action_counts);
    if outcomes > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            outcomes,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameTags {
    pub identical_interest: bool,
    pub zero_sum: bool,
    pub potential: bool,
}

/// A finite game in normal form.
///
/// Implementors must supply the pure utility oracle. The remaining methods
/// have enumeration-based defaults; structured games override them with
/// faster exact routes.
pub trait Game: Send + Sync {
    fn action_counts(&self) -> &[usize];

    /// Utility `u_i(y)` of `player` at the joint pure action `joint`.
    fn utility(&self, player: usize, joint: &[usize]) -> f64;

    fn num_players(&self) -> usize {
        self.action_counts().len()
    }

    fn tags(&self) -> GameTags {
        GameTags::default()
    }

    /// Writes `u_i(a, joint_{-i})` for every action `a` of `player` into `out`.
    /// The player's own entry of `joint` is ignored.
    fn deviation_utilities(&self, player: usize, joint: &[usize], out: &mut [f64]) {
        let mut probe = joint.to_vec();
        for (action, slot) in out.iter_mut().enumerate() {
            probe[player] = action;
            *slot = self.utility(player, &probe);
        }
    }

    /// [`Game::deviation_utilities`] for every player at once.
    fn all_deviation_utilities(&self, joint: &[usize], out: &mut [Vec<f64>]) {
        for (player, row) in out.iter_mut().enumerate() {
            self.deviation_utilities(player, joint, row);
        }
    }

    /// Whether [`Game::action_values`] can be evaluated exactly.
    fn has_exact_oracle(&self) -> bool {
        joint_space_size(self.action_counts()) <= ENUMERATION_LIMIT
    }

    /// Exact mixed utility `U_i(a, p_{-i})` for every action `a` of `player`.
    fn action_values(&self, player: usize, profile: &MixedProfile) -> Result<Vec<f64>> {
        enumerate_action_values(self, player, profile)
    }

    /// [`Game::action_values`] for every player.
    fn all_action_values(&self, profile: &MixedProfile) -> Result<Vec<Vec<f64>>> {
        (0..self.num_players())
            .map(|player| self.action_values(player, profile))
            .collect()
    }

    /// Expected value of the game's potential under independent play of
    /// `profile`, when the game carries a potential.
    fn expected_potential(&self, _profile: &MixedProfile) -> Option<Result<f64>> {
        None
    }

    fn as_congestion(&self) -> Option<&CongestionGame> {
        None
    }
}

/// One probability vector per player.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedProfile {
    strategies: Vec<Vec<f64>>,
}

impl MixedProfile {
    pub fn new(strategies: Vec<Vec<f64>>) -> Result<Self> {
        for (player, strategy) in strategies.iter().enumerate() {
            check_simplex(strategy)
                .map_err(|msg| Error::InvalidProfile(format!("player {player}: {msg}")))?;
        }
        Ok(Self { strategies })
    }

    pub fn uniform(action_counts: &[usize]) -> Self {
        Self {
            strategies: action_counts
                .iter()
                .map(|&m| vec![1.0 / m as f64; m])
                .collect(),
        }
    }

    /// Point masses on `joint`.
    pub fn pure(action_counts: &[usize], joint: &[usize]) -> Result<Self> {
        check_joint(action_counts, joint)?;
        Ok(Self {
            strategies: action_counts
                .iter()
                .zip(joint)
                .map(|(&m, &a)| one_hot(m, a))
                .collect(),
        })
    }

    pub(crate) fn strategy_mut(&mut self, player: usize) -> &mut [f64] {
        &mut self.strategies[player]
    }

    pub fn num_players(&self) -> usize {
        self.strategies.len()
    }

    pub fn strategy(&self, player: usize) -> &[f64] {
        &self.strategies[player]
    }

    pub fn strategies(&self) -> &[Vec<f64>] {
        &self.strategies
    }

    /// Replaces one player's vector, validating it.
    pub fn with_strategy(mut self, player: usize, strategy: Vec<f64>) -> Result<Self> {
        if player >= self.strategies.len() {
            return Err(Error::InvalidProfile(format!("no player {player}")));
        }
        if strategy.len() != self.strategies[player].len() {
            return Err(Error::InvalidProfile(format!(
                "player {player} needs {} entries, got {}",
                self.strategies[player].len(),
                strategy.len()
            )));
        }
        check_simplex(&strategy)
            .map_err(|msg| Error::InvalidProfile(format!("player {player}: {msg}")))?;
        self.strategies[player] = strategy;
        Ok(self)
    }

    /// Checks that vector lengths match the game's action counts.
    pub fn check_shape(&self, action_counts: &[usize]) -> Result<()> {
        if self.strategies.len() != action_counts.len() {
            return Err(Error::InvalidProfile(format!(
                "profile has {} players, game has {}",
                self.strategies.len(),
                action_counts.len()
            )));
        }
        for (player, (strategy, &m)) in self.strategies.iter().zip(action_counts).enumerate() {
            if strategy.len() != m {
                return Err(Error::InvalidProfile(format!(
                    "player {player} has {} entries, game has {m} actions",
                    strategy.len()
                )));
            }
        }
        Ok(())
    }

    /// Probability of `joint` under independent play.
    pub fn joint_probability(&self, joint: &[usize]) -> f64 {
        self.strategies
            .iter()
            .zip(joint)
            .map(|(strategy, &a)| strategy[a])
            .product()
    }
}

impl fmt::Display for MixedProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (player, strategy) in self.strategies.iter().enumerate() {
            if player > 0 {
                write!(f, " | ")?;
            }
            for (a, p) in strategy.iter().enumerate() {
                if a > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{p:.4}")?;
            }
        }
        Ok(())
    }
}

fn check_simplex(strategy: &[f64]) -> std::result::Result<(), String> {
    if strategy.is_empty() {
        return Err("empty strategy".into());
    }
    let mut total = 0.0;
    for (a, &p) in strategy.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(format!("entry {a} = {p} is not a probability"));
        }
        total += p;
    }
    if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
        return Err(format!("entries sum to {total}"));
    }
    Ok(())
}

pub(crate) fn one_hot(len: usize, index: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[index] = 1.0;
    v
}

pub(crate) fn check_joint(action_counts: &[usize], joint: &[usize]) -> Result<()> {
    if joint.len() != action_counts.len() {
        return Err(Error::InvalidAction(format!(
            "joint action has {} entries, game has {} players",
            joint.len(),
            action_counts.len()
        )));
    }
    for (player, (&a, &m)) in joint.iter().zip(action_counts).enumerate() {
        if a >= m {
            return Err(Error::InvalidAction(format!(
                "player {player} plays {a}, but has only {m} actions"
            )));
        }
    }
    Ok(())
}

fn check_player_action<G: Game + ?Sized>(game: &G, player: usize, action: usize) -> Result<()> {
    let counts = game.action_counts();
    if player >= counts.len() {
        return Err(Error::InvalidAction(format!("no player {player}")));
    }
    if action >= counts[player] {
        return Err(Error::InvalidAction(format!(
            "player {player} has no action {action}"
        )));
    }
    Ok(())
}

/// Walks every opponent joint action with non-zero probability, skipping the
/// axis `skip` (pass `usize::MAX` to walk the full joint space).
pub(crate) fn walk_support<F>(profile: &MixedProfile, skip: usize, visit: &mut F)
where
    F: FnMut(&[usize], f64),
{
    fn go<F: FnMut(&[usize], f64)>(
        profile: &MixedProfile,
        skip: usize,
        depth: usize,
        weight: f64,
        joint: &mut [usize],
        visit: &mut F,
    ) {
        if depth == joint.len() {
            visit(joint, weight);
            return;
        }
        if depth == skip {
            go(profile, skip, depth + 1, weight, joint, visit);
            return;
        }
        for (a, &p) in profile.strategy(depth).iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            joint[depth] = a;
            go(profile, skip, depth + 1, weight * p, joint, visit);
        }
    }
    let mut joint = vec![0; profile.num_players()];
    go(profile, skip, 0, 1.0, &mut joint, visit);
}

/// Enumeration route behind [`Game::action_values`].
pub fn enumerate_action_values<G: Game + ?Sized>(
    game: &G,
    player: usize,
    profile: &MixedProfile,
) -> Result<Vec<f64>> {
    let counts = game.action_counts();
    ensure_enumerable(counts)?;
    profile.check_shape(counts)?;
    check_player_action(game, player, 0)?;
    let m = counts[player];
    let mut values = vec![0.0; m];
    let mut scratch = vec![0.0; m];
    walk_support(profile, player, &mut |joint, weight| {
        game.deviation_utilities(player, joint, &mut scratch);
        for (v, u) in values.iter_mut().zip(&scratch) {
            *v += weight * u;
        }
    });
    Ok(values)
}

/// `U_i(action, p_{-i}) = sum over y_{-i} of u_i(action, y_{-i}) * prod_{j != i} p_j(y_j)`.
///
/// The entry of `profile` belonging to `player` is ignored.
pub fn mixed_utility_exact<G: Game + ?Sized>(
    game: &G,
    player: usize,
    action: usize,
    profile: &MixedProfile,
) -> Result<f64> {
    let counts = game.action_counts();
    ensure_enumerable(counts)?;
    profile.check_shape(counts)?;
    check_player_action(game, player, action)?;
    let mut total = 0.0;
    let mut probe = vec![0; counts.len()];
    walk_support(profile, player, &mut |joint, weight| {
        probe.copy_from_slice(joint);
        probe[player] = action;
        total += weight * game.utility(player, &probe);
    });
    Ok(total)
}

/// Mixed utility `U_i(p)` of a full profile, own strategy included.
pub fn profile_utility<G: Game + ?Sized>(
    game: &G,
    player: usize,
    profile: &MixedProfile,
) -> Result<f64> {
    let values = game.action_values(player, profile)?;
    Ok(values
        .iter()
        .zip(profile.strategy(player))
        .map(|(v, p)| v * p)
        .sum())
}

/// Calls `visit` on every joint pure action in odometer order (last player
/// fastest, matching the row-major tensor layout).
pub fn for_each_joint(action_counts: &[usize], mut visit: impl FnMut(&[usize])) {
    if action_counts.contains(&0) {
        return;
    }
    let mut joint = vec![0; action_counts.len()];
    loop {
        visit(&joint);
        let mut axis = joint.len();
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            joint[axis] += 1;
            if joint[axis] < action_counts[axis] {
                break;
            }
            joint[axis] = 0;
        }
    }
}

/// True iff `potential` is an exact potential for `game`: every unilateral
/// utility difference equals the matching potential difference.
pub fn check_potential_property<G, P>(game: &G, potential: P) -> Result<bool>
where
    G: Game + ?Sized,
    P: Fn(&[usize]) -> f64,
{
    let counts = game.action_counts();
    ensure_enumerable(counts)?;
    let mut holds = true;
    let mut probe = vec![0; counts.len()];
    for_each_joint(counts, |joint| {
        if !holds {
            return;
        }
        let phi_y = potential(joint);
        probe.copy_from_slice(joint);
        for player in 0..counts.len() {
            let u_y = game.utility(player, joint);
            for alt in 0..counts[player] {
                probe[player] = alt;
                let du = u_y - game.utility(player, &probe);
                let dphi = phi_y - potential(&probe);
                let scale = 1.0 + du.abs().max(dphi.abs());
                if (du - dphi).abs() > PROBABILITY_TOLERANCE * scale {
                    holds = false;
                    return;
                }
            }
            probe[player] = joint[player];
        }
    });
    Ok(holds)
}

/// How an argmax with several maximizers is resolved.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    #[default]
    LowestIndex,
    SeededUniform,
}

/// Index attaining `max(values)`.
///
/// `rng` is consulted only under [`TieRule::SeededUniform`] and only when
/// more than one index attains the maximum.
pub fn best_response<R: Rng + ?Sized>(values: &[f64], rule: TieRule, rng: &mut R) -> Result<usize> {
    if values.is_empty() {
        return Err(Error::EmptyValues);
    }
    let mut best = f64::NEG_INFINITY;
    let mut first = 0;
    let mut ties = 0usize;
    for (index, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteValue { index });
        }
        if v > best {
            best = v;
            first = index;
            ties = 1;
        } else if v == best {
            ties += 1;
        }
    }
    if rule == TieRule::LowestIndex || ties == 1 {
        return Ok(first);
    }
    let pick = rng.random_range(0..ties);
    Ok(values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == best)
        .nth(pick)
        .map(|(i, _)| i)
        .expect("pick is below the tie count"))
}

pub type UtilityFn = Arc<dyn Fn(usize, &[usize]) -> f64 + Send + Sync>;
pub type PotentialFn = Arc<dyn Fn(&[usize]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Payoffs {
    Dense(Vec<Vec<f64>>),
    Oracle(UtilityFn),
}

#[derive(Clone)]
enum Potential {
    Dense(Vec<f64>),
    Oracle(PotentialFn),
    /// Identical-interest games: the common utility.
    CommonUtility,
}

/// A normal-form game backed by dense payoff tensors or a utility closure.
#[derive(Clone)]
pub struct NormalFormGame {
    action_counts: Vec<usize>,
    strides: Vec<usize>,
    payoffs: Payoffs,
    tags: GameTags,
    potential: Option<Potential>,
}

impl fmt::Debug for NormalFormGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NormalFormGame")
            .field("action_counts", &self.action_counts)
            .field("tags", &self.tags)
            .field("dense", &matches!(self.payoffs, Payoffs::Dense(_)))
            .finish()
    }
}

fn check_counts(action_counts: &[usize]) -> Result<()> {
    if action_counts.len() < 2 {
        return Err(Error::InvalidGame(format!(
            "need at least 2 players, got {}",
            action_counts.len()
        )));
    }
    if let Some(player) = action_counts.iter().position(|&m| m == 0) {
        return Err(Error::InvalidGame(format!(
            "player {player} has no actions"
        )));
    }
    Ok(())
}

fn row_major_strides(action_counts: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; action_counts.len()];
    for axis in (0..action_counts.len().saturating_sub(1)).rev() {
        strides[axis] = strides[axis + 1] * action_counts[axis + 1];
    }
    strides
}

impl NormalFormGame {
    /// Builds a game from one row-major payoff tensor per player.
    pub fn from_tensors(action_counts: Vec<usize>, tensors: Vec<Vec<f64>>) -> Result<Self> {
        check_counts(&action_counts)?;
        ensure_enumerable(&action_counts)?;
        let size = joint_space_size(&action_counts) as usize;
        if tensors.len() != action_counts.len() {
            return Err(Error::InvalidGame(format!(
                "{} payoff tensors for {} players",
                tensors.len(),
                action_counts.len()
            )));
        }
        for (player, tensor) in tensors.iter().enumerate() {
            if tensor.len() != size {
                return Err(Error::InvalidGame(format!(
                    "payoff tensor of player {player} has {} entries, expected {size}",
                    tensor.len()
                )));
            }
            if let Some(index) = tensor.iter().position(|u| !u.is_finite()) {
                return Err(Error::InvalidGame(format!(
                    "payoff tensor of player {player} has a non-finite entry at {index}"
                )));
            }
        }
        Ok(Self {
            strides: row_major_strides(&action_counts),
            action_counts,
            payoffs: Payoffs::Dense(tensors),
            tags: GameTags::default(),
            potential: None,
        })
    }

    /// Builds a game from a pure utility closure `(player, joint) -> u`.
    pub fn from_fn<F>(action_counts: Vec<usize>, utility: F) -> Result<Self>
    where
        F: Fn(usize, &[usize]) -> f64 + Send + Sync + 'static,
    {
        check_counts(&action_counts)?;
        Ok(Self {
            strides: row_major_strides(&action_counts),
            action_counts,
            payoffs: Payoffs::Oracle(Arc::new(utility)),
            tags: GameTags::default(),
            potential: None,
        })
    }

    /// Flags the game as identical-interest after verifying it by
    /// enumeration; the common utility becomes the potential.
    pub fn identical_interest(mut self) -> Result<Self> {
        ensure_enumerable(&self.action_counts)?;
        let mut ok = true;
        for_each_joint(&self.action_counts, |joint| {
            let u0 = self.utility(0, joint);
            ok &= (1..self.action_counts.len()).all(|i| self.utility(i, joint) == u0);
        });
        if !ok {
            return Err(Error::InvalidGame(
                "flagged identical-interest but utilities differ".into(),
            ));
        }
        self.tags.identical_interest = true;
        self.tags.potential = true;
        self.potential = Some(Potential::CommonUtility);
        Ok(self)
    }

    /// Flags the game as zero-sum after verifying it by enumeration.
    pub fn zero_sum(mut self) -> Result<Self> {
        ensure_enumerable(&self.action_counts)?;
        let mut ok = true;
        for_each_joint(&self.action_counts, |joint| {
            let total: f64 = (0..self.action_counts.len())
                .map(|i| self.utility(i, joint))
                .sum();
            ok &= total.abs() <= PROBABILITY_TOLERANCE;
        });
        if !ok {
            return Err(Error::InvalidGame(
                "flagged zero-sum but utilities do not sum to zero".into(),
            ));
        }
        self.tags.zero_sum = true;
        Ok(self)
    }

    /// Attaches a row-major potential tensor, verified against the utilities.
    pub fn with_potential_tensor(mut self, tensor: Vec<f64>) -> Result<Self> {
        ensure_enumerable(&self.action_counts)?;
        let size = joint_space_size(&self.action_counts) as usize;
        if tensor.len() != size {
            return Err(Error::InvalidGame(format!(
                "potential tensor has {} entries, expected {size}",
                tensor.len()
            )));
        }
        let strides = self.strides.clone();
        let holds =
            check_potential_property(&self, |joint: &[usize]| tensor[flat_index(&strides, joint)])?;
        if !holds {
            return Err(Error::InvalidGame(
                "potential tensor does not match utility differences".into(),
            ));
        }
        self.tags.potential = true;
        self.potential = Some(Potential::Dense(tensor));
        Ok(self)
    }

    /// Attaches a potential closure without verification.
    pub fn with_potential_fn<F>(mut self, potential: F) -> Self
    where
        F: Fn(&[usize]) -> f64 + Send + Sync + 'static,
    {
        self.tags.potential = true;
        self.potential = Some(Potential::Oracle(Arc::new(potential)));
        self
    }

    /// Potential value at a pure joint action, when one is attached.
    pub fn potential(&self, joint: &[usize]) -> Option<f64> {
        match self.potential.as_ref()? {
            Potential::Dense(t) => Some(t[flat_index(&self.strides, joint)]),
            Potential::Oracle(f) => Some(f(joint)),
            Potential::CommonUtility => Some(self.utility(0, joint)),
        }
    }

    /// Dense payoff tensors, when the game was built from them.
    pub fn payoff_tensors(&self) -> Option<&[Vec<f64>]> {
        match &self.payoffs {
            Payoffs::Dense(t) => Some(t),
            Payoffs::Oracle(_) => None,
        }
    }

    /// Two-player zero-sum: player 0 wins 1 on a match, loses 1 otherwise.
    pub fn matching_pennies() -> Self {
        let row = vec![1.0, -1.0, -1.0, 1.0];
        let col = row.iter().map(|u| -u).collect();
        Self::from_tensors(vec![2, 2], vec![row, col])
            .and_then(Self::zero_sum)
            .expect("matching pennies is well formed")
    }

    /// Two-player identical-interest game paying 1 on the diagonal.
    pub fn coordination_2x2() -> Self {
        let u = vec![1.0, 0.0, 0.0, 1.0];
        Self::from_tensors(vec![2, 2], vec![u.clone(), u])
            .and_then(Self::identical_interest)
            .expect("coordination game is well formed")
    }

    /// Identical-interest game paying 1 iff every player picks the same action.
    pub fn unanimity(num_players: usize, num_actions: usize) -> Result<Self> {
        Self::from_fn(vec![num_actions; num_players], |_, joint: &[usize]| {
            if joint.iter().all(|&a| a == joint[0]) {
                1.0
            } else {
                0.0
            }
        })?
        .identical_interest()
    }
}

fn flat_index(strides: &[usize], joint: &[usize]) -> usize {
    strides.iter().zip(joint).map(|(s, a)| s * a).sum()
}

impl Game for NormalFormGame {
    fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    fn utility(&self, player: usize, joint: &[usize]) -> f64 {
        match &self.payoffs {
            Payoffs::Dense(t) => t[player][flat_index(&self.strides, joint)],
            Payoffs::Oracle(f) => f(player, joint),
        }
    }

    fn tags(&self) -> GameTags {
        self.tags
    }

    fn deviation_utilities(&self, player: usize, joint: &[usize], out: &mut [f64]) {
        match &self.payoffs {
            Payoffs::Dense(t) => {
                let stride = self.strides[player];
                let base = flat_index(&self.strides, joint) - stride * joint[player];
                let tensor = &t[player];
                for (action, slot) in out.iter_mut().enumerate() {
                    *slot = tensor[base + stride * action];
                }
            }
            Payoffs::Oracle(_) => {
                let mut probe = joint.to_vec();
                for (action, slot) in out.iter_mut().enumerate() {
                    probe[player] = action;
                    *slot = self.utility(player, &probe);
                }
            }
        }
    }

    fn expected_potential(&self, profile: &MixedProfile) -> Option<Result<f64>> {
        self.potential.as_ref()?;
        let result = ensure_enumerable(&self.action_counts)
            .and_then(|_| profile.check_shape(&self.action_counts))
            .map(|_| {
                let mut total = 0.0;
                walk_support(profile, usize::MAX, &mut |joint, weight| {
                    total += weight * self.potential(joint).expect("potential attached");
                });
                total
            });
        Some(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matching_pennies_against_uniform_is_zero() {
        let game = NormalFormGame::matching_pennies();
        let p = MixedProfile::uniform(game.action_counts());
        assert_eq!(mixed_utility_exact(&game, 0, 0, &p).unwrap(), 0.0);
        assert_eq!(mixed_utility_exact(&game, 0, 1, &p).unwrap(), 0.0);
    }

    #[test]
    fn point_mass_opponent_gives_pure_utility() {
        let game = NormalFormGame::matching_pennies();
        for joint in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            let p = MixedProfile::pure(game.action_counts(), &joint).unwrap();
            for player in 0..2 {
                let exact = mixed_utility_exact(&game, player, joint[player], &p).unwrap();
                assert_eq!(exact, game.utility(player, &joint));
            }
        }
    }

    #[test]
    fn three_player_unanimity_against_uniform() {
        // Opponents uniform over 2 actions: 4 outcomes, exactly one matches.
        let game = NormalFormGame::unanimity(3, 2).unwrap();
        let p = MixedProfile::uniform(game.action_counts());
        let mut brute = 0.0;
        for y1 in 0..2 {
            for y2 in 0..2 {
                brute += 0.25 * game.utility(0, &[0, y1, y2]);
            }
        }
        assert_eq!(brute, 0.25);
        for action in 0..2 {
            assert_eq!(mixed_utility_exact(&game, 0, action, &p).unwrap(), 0.25);
        }
    }

    #[test]
    fn enumeration_guard_trips() {
        let game = NormalFormGame::from_fn(vec![10; 8], |_, _| 0.0).unwrap();
        let p = MixedProfile::uniform(game.action_counts());
        assert!(matches!(
            mixed_utility_exact(&game, 0, 0, &p),
            Err(Error::EnumerationTooLarge { .. })
        ));
        assert!(!game.has_exact_oracle());
    }

    #[test]
    fn best_response_lowest_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            best_response(&[1.0, 2.0, 2.0], TieRule::LowestIndex, &mut rng).unwrap(),
            1
        );
        assert_eq!(
            best_response(&[5.0], TieRule::LowestIndex, &mut rng).unwrap(),
            0
        );
        assert_eq!(
            best_response(&[5.0], TieRule::SeededUniform, &mut rng).unwrap(),
            0
        );
    }

    #[test]
    fn best_response_rejects_bad_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            best_response(&[1.0, f64::NAN], TieRule::LowestIndex, &mut rng),
            Err(Error::NonFiniteValue { index: 1 })
        );
        assert_eq!(
            best_response(&[f64::INFINITY], TieRule::LowestIndex, &mut rng),
            Err(Error::NonFiniteValue { index: 0 })
        );
        assert_eq!(
            best_response(&[], TieRule::LowestIndex, &mut rng),
            Err(Error::EmptyValues)
        );
    }

    #[test]
    fn seeded_uniform_ties_are_reproducible_and_balanced() {
        let draws = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..10_000)
                .map(|_| best_response(&[0.0, 0.0], TieRule::SeededUniform, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        let a = draws(7);
        assert_eq!(a, draws(7));
        let zeros = a.iter().filter(|&&i| i == 0).count() as f64;
        // Binomial(10^4, 1/2): sd = 50, allow 4 sd.
        assert!((zeros - 5000.0).abs() <= 200.0, "zeros = {zeros}");
        assert!(a.iter().all(|&i| i < 2));
    }

    #[test]
    fn potential_property() {
        let coord = NormalFormGame::coordination_2x2();
        let c = coord.clone();
        assert!(check_potential_property(&coord, move |y: &[usize]| c.utility(0, y)).unwrap());

        // Matching pennies with zero potential: u_0(0,0) - u_0(1,0) = 2 != 0.
        let mp = NormalFormGame::matching_pennies();
        assert_eq!(mp.utility(0, &[0, 0]) - mp.utility(0, &[1, 0]), 2.0);
        assert!(!check_potential_property(&mp, |_: &[usize]| 0.0).unwrap());
    }

    #[test]
    fn tag_verification() {
        let mp = NormalFormGame::matching_pennies();
        assert!(mp.tags().zero_sum);
        assert!(mp.clone().identical_interest().is_err());
        let coord = NormalFormGame::coordination_2x2();
        assert!(coord.tags().identical_interest && coord.tags().potential);
        assert!(coord.zero_sum().is_err());
    }

    #[test]
    fn tensor_validation() {
        assert!(NormalFormGame::from_tensors(vec![2], vec![vec![0.0; 2]]).is_err());
        assert!(NormalFormGame::from_tensors(vec![2, 0], vec![vec![], vec![]]).is_err());
        assert!(NormalFormGame::from_tensors(vec![2, 2], vec![vec![0.0; 4]]).is_err());
        assert!(
            NormalFormGame::from_tensors(vec![2, 2], vec![vec![0.0; 4], vec![0.0; 3]]).is_err()
        );
        assert!(
            NormalFormGame::from_tensors(vec![2, 2], vec![vec![0.0; 4], vec![f64::NAN; 4]])
                .is_err()
        );
    }

    #[test]
    fn row_major_layout() {
        // u_0 = 100 y0 + 10 y1 + y2 on a 2x3x4 game.
        let counts = vec![2, 3, 4];
        let mut t = Vec::new();
        for_each_joint(&counts, |j| t.push((100 * j[0] + 10 * j[1] + j[2]) as f64));
        let game = NormalFormGame::from_tensors(counts, vec![t.clone(), t.clone(), t]).unwrap();
        assert_eq!(game.utility(0, &[1, 2, 3]), 123.0);
        let mut out = vec![0.0; 3];
        game.deviation_utilities(1, &[1, 0, 3], &mut out);
        assert_eq!(out, vec![103.0, 113.0, 123.0]);
    }

    #[test]
    fn profile_validation() {
        assert!(MixedProfile::new(vec![vec![0.5, 0.5], vec![0.7, 0.2]]).is_err());
        assert!(MixedProfile::new(vec![vec![1.5, -0.5]]).is_err());
        assert!(MixedProfile::new(vec![vec![]]).is_err());
        assert!(MixedProfile::new(vec![vec![0.5, 0.5 + 1e-12]]).is_ok());
        assert!(MixedProfile::pure(&[2, 2], &[0, 2]).is_err());
        let game = NormalFormGame::matching_pennies();
        let wrong = MixedProfile::uniform(&[2, 3]);
        assert!(mixed_utility_exact(&game, 0, 0, &wrong).is_err());
        assert!(mixed_utility_exact(&game, 0, 2, &MixedProfile::uniform(&[2, 2])).is_err());
    }

    #[test]
    fn expected_potential_of_coordination() {
        let game = NormalFormGame::coordination_2x2();
        let p = MixedProfile::new(vec![vec![0.25, 0.75], vec![0.5, 0.5]]).unwrap();
        let phi = game.expected_potential(&p).unwrap().unwrap();
        assert!((phi - (0.25 * 0.5 + 0.75 * 0.5)).abs() < 1e-15);
        assert!(NormalFormGame::matching_pennies()
            .expected_potential(&p)
            .is_none());
    }
}

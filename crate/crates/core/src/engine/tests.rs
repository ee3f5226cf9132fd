use proptest::prelude::*;
use rand::seq::IndexedRandom;

use super::*;
use crate::card::{parse_cards, Card, CardSet};
use crate::error::EngineError;
use crate::rng::seeded;

fn set(s: &str) -> CardSet {
    parse_cards(s).unwrap().into_iter().collect()
}

fn card(s: &str) -> Card {
    s.parse().unwrap()
}

/// Builds a state from explicit hands and discard stack; every other card goes to the
/// stock in index order.
fn state_with(hands: &[&str], stack: &[&str], phase: Phase, current: usize) -> RoundState {
    let players: Vec<PlayerState> =
        hands.iter().map(|h| PlayerState { hand: set(h), coins: STARTING_COINS }).collect();
    let discard_stack: Vec<DiscardGroup> =
        stack.iter().map(|g| DiscardGroup::from_cards(&parse_cards(g).unwrap()).unwrap()).collect();
    let used = players
        .iter()
        .map(|p| p.hand)
        .chain(discard_stack.iter().map(|g| g.card_set()))
        .fold(CardSet::EMPTY, CardSet::union);
    let stock: Vec<Card> = CardSet::FULL.difference(used).iter().collect();
    RoundState::from_parts(
        players,
        stock,
        discard_stack,
        Vec::new(),
        current,
        0,
        phase,
        RuleConfig::default(),
        0,
    )
    .unwrap()
}

#[test]
fn deal_sizes() {
    let mut rng = seeded(1);
    let s5 = deal(5, &mut rng).unwrap();
    assert_eq!(s5.stock().len(), 26);
    assert!(s5.players().iter().all(|p| p.hand.len() == 5));
    assert_eq!(s5.discard_stack().len(), 1);
    assert_eq!(s5.phase(), Phase::JhyapCheck);
    assert_eq!(s5.turn_count(), 0);
    let s2 = deal(2, &mut rng).unwrap();
    assert_eq!(s2.stock().len(), 41);
    assert_eq!(deal(1, &mut rng).unwrap_err(), EngineError::PlayerCount(1));
    assert_eq!(deal(6, &mut rng).unwrap_err(), EngineError::PlayerCount(6));
}

#[test]
fn deal_is_deterministic() {
    let a = deal(4, &mut seeded(42)).unwrap();
    let b = deal(4, &mut seeded(42)).unwrap();
    assert_eq!(a.players(), b.players());
    assert_eq!(a.stock(), b.stock());
    assert_eq!(a.discard_stack(), b.discard_stack());
}

#[test]
fn discard_set_removes_cards() {
    let mut s = state_with(&["5H 5S 2C", "KC QC JC 10C 9C"], &["3D"], Phase::Discard, 0);
    let g = DiscardGroup::from_cards(&parse_cards("5H 5S").unwrap()).unwrap();
    s.apply(Action::Discard(g), &mut seeded(0)).unwrap();
    assert_eq!(s.hand(0), set("2C"));
    assert_eq!(s.phase(), Phase::Pick);
    // the discarder may take the previous top, not its own group
    assert_eq!(s.pickable_top(), Some(card("3D")));
}

#[test]
fn discard_not_in_hand_is_rejected_without_mutation() {
    let mut s = state_with(&["5H 5S 2C", "KC QC JC 10C 9C"], &["3D"], Phase::Discard, 0);
    let before = s.clone();
    let g = DiscardGroup::single(card("9H"));
    assert!(matches!(s.apply(Action::Discard(g), &mut seeded(0)), Err(EngineError::IllegalDiscard(_))));
    assert_eq!(s.players(), before.players());
    assert_eq!(s.phase(), before.phase());
}

#[test]
fn discarding_whole_hand_ends_round() {
    let mut s = state_with(&["5H 5S", "KC QC JC 10C 9C"], &["3D"], Phase::Discard, 0);
    let g = DiscardGroup::from_cards(&parse_cards("5H 5S").unwrap()).unwrap();
    let outcome = s.apply(Action::Discard(g), &mut seeded(0)).unwrap().unwrap();
    assert_eq!(outcome.end_reason, EndReason::EmptyHand);
    assert_eq!(outcome.winner, Some(0));
    assert_eq!(outcome.coin_delta, vec![55, -55]);
}

#[test]
fn pick_discard_top_takes_previous_top() {
    let mut s = state_with(&["5H 9S 2C", "KC QC JC 10C 9C"], &["3D"], Phase::Discard, 0);
    s.apply(Action::Discard(DiscardGroup::single(card("9S"))), &mut seeded(0)).unwrap();
    s.apply(Action::Pick(PickSource::DiscardTop), &mut seeded(0)).unwrap();
    assert!(s.hand(0).contains(card("3D")));
    assert!(s.known_cards()[0].contains(card("3D")));
    assert_eq!(s.current_player(), 1);
    assert_eq!(s.phase(), Phase::JhyapCheck);
    assert_eq!(s.pickable_top(), Some(card("9S")));
}

#[test]
fn pick_without_prior_discard_is_an_error() {
    let mut s = state_with(&["5H 9S 2C", "KC QC JC 10C 9C"], &[], Phase::Discard, 0);
    s.apply(Action::Discard(DiscardGroup::single(card("9S"))), &mut seeded(0)).unwrap();
    assert_eq!(
        s.apply(Action::Pick(PickSource::DiscardTop), &mut seeded(0)),
        Err(EngineError::NoDiscardTop)
    );
}

#[test]
fn stock_is_refilled_from_older_discards() {
    let mut rng = seeded(7);
    let mut s = deal(2, &mut rng).unwrap();
    // play stock-only turns until the stock runs dry once
    let mut reshuffled = false;
    while !s.is_terminal() {
        let before_stock = s.stock().len();
        let action = match s.phase() {
            Phase::JhyapCheck => Action::Decline,
            Phase::Discard => Action::Discard(DiscardGroup::single(s.hand(s.current_player()).iter().next().unwrap())),
            Phase::Pick => Action::Pick(PickSource::Stock),
        };
        let newest = s.discard_stack().last().copied();
        s.apply(action, &mut rng).unwrap();
        if before_stock == 1 && action == Action::Pick(PickSource::Stock) && !s.is_terminal() {
            assert!(!s.stock().is_empty());
            assert_eq!(s.discard_stack().len(), 1);
            assert_eq!(s.discard_stack().last().copied(), newest);
            reshuffled = true;
            break;
        }
    }
    assert!(reshuffled || s.is_terminal());
    assert!(s.conserves_cards());
}

#[test]
fn stock_pick_is_deterministic() {
    let run = || {
        let mut rng = seeded(99);
        let mut s = deal(3, &mut rng).unwrap();
        s.apply(Action::Decline, &mut rng).unwrap();
        let c = s.hand(0).iter().next().unwrap();
        s.apply(Action::Discard(DiscardGroup::single(c)), &mut rng).unwrap();
        s.apply(Action::Pick(PickSource::Stock), &mut rng).unwrap();
        s.hand(0)
    };
    assert_eq!(run(), run());
}

#[test]
fn successful_showdown_pays_declarer() {
    let o = settle_showdown(&[8, 15, 20, 30], 0).unwrap();
    assert_eq!(o.coin_delta, vec![65, -15, -20, -30]);
    assert_eq!(o.winner, Some(0));
    assert_eq!(o.jhyap_succeeded, Some(true));
}

#[test]
fn loser_payment_is_capped() {
    let o = settle_showdown(&[3, 120], 0).unwrap();
    assert_eq!(o.coin_delta, vec![100, -100]);
}

#[test]
fn failed_showdown_declarer_pays_everyone_capped() {
    let o = settle_showdown(&[9, 9], 0).unwrap();
    assert_eq!(o.winner, Some(1));
    assert_eq!(o.jhyap_succeeded, Some(false));
    assert_eq!(o.coin_delta, vec![-18, 18]);

    // tie among non-declarers: first clockwise from the declarer wins
    let o = settle_showdown(&[20, 7, 10, 7], 2).unwrap();
    assert_eq!(o.winner, Some(3));
    assert_eq!(o.coin_delta, vec![0, 0, -44, 44]);

    let o = settle_showdown(&[9, 5, 150], 0).unwrap();
    assert_eq!(o.coin_delta, vec![-114, 114, 0]);
}

#[test]
fn showdown_requires_low_hand() {
    assert_eq!(settle_showdown(&[11, 20], 0).unwrap_err(), EngineError::CannotDeclare(11));
}

#[test]
fn turn_limit_is_a_draw() {
    let mut rng = seeded(3);
    let mut s = deal(2, &mut rng).unwrap();
    s.rules.turn_limit = 2;
    while !s.is_terminal() {
        let action = match s.phase() {
            Phase::JhyapCheck => Action::Decline,
            Phase::Discard => Action::Discard(DiscardGroup::single(s.hand(s.current_player()).iter().next().unwrap())),
            Phase::Pick => Action::Pick(PickSource::Stock),
        };
        s.apply(action, &mut rng).unwrap();
    }
    let o = s.outcome().unwrap();
    assert_eq!(o.end_reason, EndReason::TurnLimit);
    assert_eq!(o.winner, None);
    assert!(o.coin_delta.iter().all(|&d| d == 0));
    assert_eq!(s.turn_count(), 2);
}

#[test]
fn orbit_counting_counts_full_cycles() {
    let mut rng = seeded(3);
    let coins = vec![STARTING_COINS; 3];
    let rules = RuleConfig { turn_limit: 2, turn_counting: TurnCounting::PerOrbit };
    let mut s = RoundState::deal_with(&coins, rules, 0, &mut rng).unwrap();
    while !s.is_terminal() {
        let action = match s.phase() {
            Phase::JhyapCheck => Action::Decline,
            Phase::Discard => Action::Discard(DiscardGroup::single(s.hand(s.current_player()).iter().next().unwrap())),
            Phase::Pick => Action::Pick(PickSource::Stock),
        };
        s.apply(action, &mut rng).unwrap();
    }
    assert_eq!(s.player_turns(), 6);
}

#[test]
fn round_termination_mid_round_is_none() {
    let s = deal(4, &mut seeded(5)).unwrap();
    assert!(s.round_termination().is_none());
}

#[test]
fn phase_machine_rejects_out_of_phase_actions() {
    let mut s = state_with(&["5H 9S 2C", "KC QC JC 10C 9C"], &["3D"], Phase::JhyapCheck, 0);
    let mut rng = seeded(0);
    assert!(matches!(
        s.apply(Action::Pick(PickSource::Stock), &mut rng),
        Err(EngineError::WrongPhase { .. })
    ));
    assert!(matches!(
        s.apply(Action::Discard(DiscardGroup::single(card("9S"))), &mut rng),
        Err(EngineError::WrongPhase { .. })
    ));
    assert_eq!(s.apply(Action::DeclareJhyap, &mut rng), Err(EngineError::CannotDeclare(16)));
    s.apply(Action::Decline, &mut rng).unwrap();
    assert!(matches!(s.apply(Action::Decline, &mut rng), Err(EngineError::WrongPhase { .. })));
}

#[test]
fn observation_coin_averages() {
    let mut s = deal(2, &mut seeded(1)).unwrap();
    s.players[1].coins = 10_050;
    assert_eq!(observation_for(&s, 0).unwrap().avg_opponent_coins, 10_050.0);

    let mut s = deal(4, &mut seeded(1)).unwrap();
    s.players[1].coins = 10_000;
    s.players[2].coins = 9_000;
    s.players[3].coins = 11_000;
    let o = observation_for(&s, 0).unwrap();
    assert_eq!(o.avg_opponent_coins, 10_000.0);
    assert_eq!(o.opponent_hand_sizes, vec![5, 5, 5]);
    assert!(observation_for(&s, 4).is_err());
}

/// Plays uniformly random legal actions, checking the information-hiding contract
/// and the legality of observation-derived actions at every step.
fn random_round(num_players: usize, seed: u64) -> RoundState {
    let mut rng = seeded(seed);
    let mut s = deal(num_players, &mut rng).unwrap();
    while !s.is_terminal() {
        let actor = s.current_player();
        for seat in 0..num_players {
            let obs = observation_for(&s, seat).unwrap();
            let public = obs.known_cards.iter().fold(CardSet::EMPTY, |a, k| a.union(*k));
            for other in (0..num_players).filter(|&o| o != seat) {
                let hidden = s.hand(other).difference(public);
                assert!(obs.own_hand.is_disjoint(hidden));
                assert!(obs.discard_pile.is_disjoint(hidden));
                assert!(obs.unseen_cards().is_superset_of(hidden));
            }
        }
        let legal = s.legal_actions();
        assert_eq!(observation_for(&s, actor).unwrap().legal_actions(), legal);
        let a = *legal.choose(&mut rng).unwrap();
        s.apply(a, &mut rng).unwrap();
        assert!(s.conserves_cards());
    }
    s
}

trait Superset {
    fn is_superset_of(self, other: CardSet) -> bool;
}

impl Superset for CardSet {
    fn is_superset_of(self, other: CardSet) -> bool {
        other.is_subset(self)
    }
}

#[test]
fn random_rounds_are_zero_sum_and_conserve_cards() {
    for seed in 0..200 {
        let n = 2 + (seed as usize % 4);
        let s = random_round(n, seed);
        let o = s.outcome().unwrap();
        assert_eq!(o.coin_delta.iter().sum::<i64>(), 0);
        assert!(o.jhyap_declared_by.is_some() == o.jhyap_succeeded.is_some());
        let total: i64 = s.players().iter().map(|p| p.coins).sum();
        assert_eq!(total, STARTING_COINS * n as i64);
    }
}

/// Independent legality oracle: filter every subset of the hand.
fn brute_force_discards(hand: &[Card]) -> Vec<CardSet> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << hand.len()) {
        let cards: Vec<Card> =
            (0..hand.len()).filter(|i| mask & (1 << i) != 0).map(|i| hand[i]).collect();
        let single = cards.len() == 1;
        let same_rank = cards.len() >= 2 && cards.iter().all(|c| c.rank() == cards[0].rank());
        let run = {
            let mut ranks: Vec<u8> = cards.iter().map(|c| c.rank()).collect();
            ranks.sort_unstable();
            cards.len() >= 3
                && cards.iter().all(|c| c.suit() == cards[0].suit())
                && ranks.windows(2).all(|w| w[1] == w[0] + 1)
        };
        if single || same_rank || run {
            out.push(cards.into_iter().collect());
        }
    }
    out.sort_by_key(|s: &CardSet| s.bits());
    out
}

proptest! {
    #[test]
    fn enumeration_matches_subset_oracle(indices in proptest::sample::subsequence((0u8..52).collect::<Vec<_>>(), 1..=7)) {
        let hand: Vec<Card> = indices.into_iter().map(Card::from_index).collect();
        let set: CardSet = hand.iter().copied().collect();
        let mut got: Vec<CardSet> = enumerate_legal_discards(set).unwrap().iter().map(|g| g.card_set()).collect();
        got.sort_by_key(|s| s.bits());
        prop_assert_eq!(got, brute_force_discards(&hand));
    }

    #[test]
    fn showdown_is_zero_sum_and_capped(values in proptest::collection::vec(0u32..200, 2..=5), declarer_value in 0u32..=10, seat in 0usize..5) {
        let mut values = values;
        let declarer = seat % values.len();
        values[declarer] = declarer_value;
        let o = settle_showdown(&values, declarer).unwrap();
        prop_assert_eq!(o.coin_delta.iter().sum::<i64>(), 0);
        // every non-declarer pays at most the cap
        for (i, d) in o.coin_delta.iter().enumerate() {
            if i != declarer {
                prop_assert!(*d >= -(PAYMENT_CAP as i64));
            }
        }
    }
}

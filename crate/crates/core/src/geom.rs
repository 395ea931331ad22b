use std::fmt;

/// Grid coordinate. Signed so that egocentric windows can address cells
/// outside the world.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub row: i32,
    pub col: i32,
}

impl Pos {
    pub const fn new(row: i32, col: i32) -> Self {
        Self { row, col }
    }

    pub fn offset(self, drow: i32, dcol: i32) -> Self {
        Self::new(self.row + drow, self.col + dcol)
    }

    pub fn manhattan(self, other: Pos) -> u32 {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }

    pub fn chebyshev(self, other: Pos) -> u32 {
        self.row.abs_diff(other.row).max(self.col.abs_diff(other.col))
    }

    /// Orthogonal neighbours in N, S, E, W order.
    pub fn neighbors4(self) -> [Pos; 4] {
        [
            self.offset(-1, 0),
            self.offset(1, 0),
            self.offset(0, 1),
            self.offset(0, -1),
        ]
    }

    pub fn is_orthogonally_adjacent(self, other: Pos) -> bool {
        self.manhattan(other) == 1
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// The five discrete actions available to a free agent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    MoveNorth,
    MoveSouth,
    MoveEast,
    MoveWest,
    JoinQueue,
}

impl Action {
    pub const COUNT: usize = 5;
    pub const ALL: [Action; 5] = [
        Action::MoveNorth,
        Action::MoveSouth,
        Action::MoveEast,
        Action::MoveWest,
        Action::JoinQueue,
    ];
    pub const MOVES: [Action; 4] = [
        Action::MoveNorth,
        Action::MoveSouth,
        Action::MoveEast,
        Action::MoveWest,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Action> {
        Self::ALL.get(index).copied()
    }

    /// Unit displacement `(drow, dcol)` of a move; `None` for `JoinQueue`.
    pub fn delta(self) -> Option<(i32, i32)> {
        match self {
            Action::MoveNorth => Some((-1, 0)),
            Action::MoveSouth => Some((1, 0)),
            Action::MoveEast => Some((0, 1)),
            Action::MoveWest => Some((0, -1)),
            Action::JoinQueue => None,
        }
    }

    pub fn is_move(self) -> bool {
        self != Action::JoinQueue
    }

    /// Move whose displacement is `(drow, dcol)`, if it is a unit step.
    pub fn from_delta(drow: i32, dcol: i32) -> Option<Action> {
        Self::MOVES.into_iter().find(|a| a.delta() == Some((drow, dcol)))
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::MoveNorth => "north",
            Action::MoveSouth => "south",
            Action::MoveEast => "east",
            Action::MoveWest => "west",
            Action::JoinQueue => "join",
        }
    }
}

/// Per-action validity flags, indexed by [`Action::index`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ActionMask(pub [bool; 5]);

impl ActionMask {
    pub const ALL_VALID: ActionMask = ActionMask([true; 5]);
    pub const NONE_VALID: ActionMask = ActionMask([false; 5]);

    pub fn allows(&self, action: Action) -> bool {
        self.0[action.index()]
    }

    pub fn set(&mut self, action: Action, valid: bool) {
        self.0[action.index()] = valid;
    }

    pub fn any(&self) -> bool {
        self.0.iter().any(|&v| v)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&v| v).count()
    }

    pub fn valid_actions(&self) -> impl Iterator<Item = Action> + '_ {
        Action::ALL.into_iter().filter(|a| self.allows(*a))
    }

    pub fn is_subset_of(&self, other: &ActionMask) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(&a, &b)| !a || b)
    }
}

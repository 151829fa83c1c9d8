//! Room types, their furniture and the category priors shared by the scene
//! generator and the prior oracle.

use crate::scene_graph::RelatedCategoryLexicon;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoomSpec {
    pub room_type: &'static str,
    /// Goal category that lives only in this room type.
    pub goal: &'static str,
    /// Object always placed next to the goal.
    pub companion: &'static str,
    pub furniture: &'static [&'static str],
}

pub const ROOMS: [RoomSpec; 6] = [
    RoomSpec {
        room_type: "bedroom",
        goal: "bed",
        companion: "nightstand",
        furniture: &["wardrobe", "dresser", "lamp", "window", "curtains", "closet", "hangers", "clock"],
    },
    RoomSpec {
        room_type: "living room",
        goal: "tv",
        companion: "sofa",
        furniture: &[
            "table",
            "coffee table",
            "living room rug",
            "fireplace",
            "mantel",
            "floor lamp",
            "reading chair",
            "couch",
            "throw pillows",
            "plant",
            "piano",
            "bench",
        ],
    },
    RoomSpec {
        room_type: "kitchen",
        goal: "refrigerator",
        companion: "freezer",
        furniture: &["counter", "stove", "oven", "microwave", "kitchen cabinet", "dishes", "sink", "table", "chair"],
    },
    RoomSpec {
        room_type: "bathroom",
        goal: "toilet",
        companion: "bathroom sink",
        furniture: &["mirror", "shower", "bathtub", "bathroom cabinet", "toiletries", "towel", "washing machine", "dryer"],
    },
    RoomSpec {
        room_type: "office",
        goal: "desk",
        companion: "office chair",
        furniture: &["computer", "monitor", "bookshelf", "chair", "bookcase", "books", "lamp", "plant"],
    },
    RoomSpec {
        room_type: "dining room",
        goal: "dining table",
        companion: "chair",
        furniture: &["dining room chandelier", "mirror", "plant", "window", "curtains", "clock", "table", "cabinet"],
    },
];

pub fn room_spec(room_type: &str) -> Option<&'static RoomSpec> {
    ROOMS.iter().find(|r| r.room_type.eq_ignore_ascii_case(room_type))
}

pub fn is_room_type(label: &str) -> bool {
    room_spec(label).is_some()
}

/// Room types in which a category can appear.
pub fn home_rooms(category: &str) -> Vec<&'static str> {
    ROOMS
        .iter()
        .filter(|r| {
            r.goal.eq_ignore_ascii_case(category)
                || r.companion.eq_ignore_ascii_case(category)
                || r.furniture.iter().any(|f| f.eq_ignore_ascii_case(category))
        })
        .map(|r| r.room_type)
        .collect()
}

/// Room type whose goal category is `goal`.
pub fn goal_room(goal: &str) -> Option<&'static str> {
    ROOMS.iter().find(|r| r.goal.eq_ignore_ascii_case(goal)).map(|r| r.room_type)
}

pub fn goal_categories() -> impl Iterator<Item = &'static str> {
    ROOMS.iter().map(|r| r.goal)
}

/// Whether two categories are usually found side by side.
pub fn are_companions(a: &str, b: &str) -> bool {
    ROOMS.iter().any(|r| {
        (r.goal.eq_ignore_ascii_case(a) && r.companion.eq_ignore_ascii_case(b))
            || (r.goal.eq_ignore_ascii_case(b) && r.companion.eq_ignore_ascii_case(a))
    }) || RelatedCategoryLexicon::default().related(a, b)
}

/// Commonsense distance, in meters, between an object category and a goal
/// category; the oracle's answer to the object-level distance question.
pub fn prior_distance(object: &str, goal: &str) -> f64 {
    if object.eq_ignore_ascii_case(goal) {
        return 0.0;
    }
    if are_companions(object, goal) {
        return 0.5;
    }
    let Some(goal_home) = goal_room(goal) else {
        return 5.0;
    };
    let homes = home_rooms(object);
    if homes.is_empty() {
        5.0
    } else if homes == [goal_home] {
        1.5
    } else if homes.contains(&goal_home) {
        3.0
    } else {
        8.0
    }
}

/// Object placed next to the goal in every scene, used for the oracle's
/// clarifying question.
pub fn companion_of(goal: &str) -> Option<&'static str> {
    ROOMS.iter().find(|r| r.goal.eq_ignore_ascii_case(goal)).map(|r| r.companion)
}

use std::collections::VecDeque;

use crate::error::{Error, Result};

use super::{AreaId, PersonId, HOURS_PER_DAY};

/// Hours each individual spent in each area during one day, stored densely
/// as an M × N row-major matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DayVisits {
    pub day: u32,
    population: usize,
    n_areas: usize,
    hours: Vec<u8>,
}

impl DayVisits {
    pub fn new(day: u32, population: usize, n_areas: usize) -> Self {
        Self {
            day,
            population,
            n_areas,
            hours: vec![0; population * n_areas],
        }
    }

    pub fn population(&self) -> usize {
        self.population
    }

    pub fn n_areas(&self) -> usize {
        self.n_areas
    }

    pub fn hours(&self, person: PersonId, area: AreaId) -> u8 {
        self.hours[person as usize * self.n_areas + area as usize]
    }

    pub fn row(&self, person: PersonId) -> &[u8] {
        let start = person as usize * self.n_areas;
        &self.hours[start..start + self.n_areas]
    }

    /// Records one more hour of `person` in `area`.
    pub fn add_hour(&mut self, person: PersonId, area: AreaId) {
        let cell = &mut self.hours[person as usize * self.n_areas + area as usize];
        debug_assert!((*cell as usize) < HOURS_PER_DAY);
        *cell += 1;
    }

    pub fn set_hours(&mut self, person: PersonId, area: AreaId, hours: u8) -> Result<()> {
        if person as usize >= self.population || area as usize >= self.n_areas {
            return Err(Error::contract(format!(
                "visit ({person}, {area}) outside {}x{} matrix",
                self.population, self.n_areas
            )));
        }
        let idx = person as usize * self.n_areas + area as usize;
        let others: usize =
            self.row(person).iter().map(|&h| h as usize).sum::<usize>() - self.hours[idx] as usize;
        let total = others + hours as usize;
        if total > HOURS_PER_DAY {
            return Err(Error::contract(format!(
                "individual {person} has {total} recorded hours on day {}",
                self.day
            )));
        }
        self.hours[idx] = hours;
        Ok(())
    }

    /// Number of distinct visitors per area.
    pub fn visitors_per_area(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.n_areas];
        for row in self.hours.chunks_exact(self.n_areas) {
            for (a, &h) in row.iter().enumerate() {
                if h > 0 {
                    out[a] += 1;
                }
            }
        }
        out
    }
}

/// Ring buffer of the most recent days of visits, newest last.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VisitHistory {
    capacity: usize,
    days: VecDeque<DayVisits>,
}

impl VisitHistory {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            days: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn push(&mut self, visits: DayVisits) {
        if self.days.len() == self.capacity {
            self.days.pop_front();
        }
        self.days.push_back(visits);
    }

    /// The `k`-th most recent day (0 = newest), if recorded.
    pub fn recent(&self, k: usize) -> Option<&DayVisits> {
        self.days.len().checked_sub(k + 1).map(|i| &self.days[i])
    }

    /// Up to `n` most recent days, newest first.
    pub fn last(&self, n: usize) -> impl Iterator<Item = &DayVisits> {
        self.days.iter().rev().take(n)
    }
}

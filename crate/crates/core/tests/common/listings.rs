//! The sample squad table and its two expected encodings.

use tabreason::table::{RawTable, RowIdSet, Table};

pub const SCHEMA_LISTING: &str = "CREATE TABLE 2012–13 Exeter City F.C. season(
\trow_id int,
\tname text,
\tleague int,
\ttotal int)
/
All rows of the table:
SELECT * FROM w;
row_id\tname\tleague\ttotal
1\tdanny coles\t3\t3
4\tjohn o'flynn\t11\t12
8\tjamie cureton\t20\t20
/
columns: ['name', 'league', 'total']";

pub const PIPE_LISTING: &str = "table caption: 2012–13 Exeter City F.C. season
/
col : name | league | total
row 1: danny coles | 3 | 3
row 4: john o'flynn | 11 | 12
row 8: jamie cureton | 20 | 20
*/
columns: ['name', 'league', 'total']";

pub fn sample() -> Table {
    let names = [
        "danny coles", "scot bennett", "arron davies", "john o'flynn",
        "ryan harley", "guillem bauza", "alan gow", "jamie cureton",
    ];
    let league = ["3", "5", "4", "11", "10", "2", "6", "20"];
    let total = ["3", "5", "4", "12", "10", "2", "6", "20"];
    let raw = RawTable {
        caption: Some("2012–13 Exeter City F.C. season".into()),
        header: vec!["Name".into(), "League".into(), "Total".into()],
        rows: (0..8)
            .map(|i| vec![names[i].to_string(), league[i].to_string(), total[i].to_string()])
            .collect(),
    };
    let mut keep = RowIdSet::default();
    [1, 4, 8].into_iter().for_each(|i| keep.insert(i));
    Table::load(&raw).unwrap().filter_rows(&keep).unwrap()
}

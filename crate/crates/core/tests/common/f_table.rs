#![allow(clippy::excessive_precision)]
// Upper-tail F(d1, d2) probabilities from 40-digit incomplete beta evaluations.
pub const F_UPPER_TAIL: [(usize, usize, f64, f64); 64] = [
    (1, 10, 0.05, 0.82756515920096752688),
    (1, 10, 0.5, 0.49564750438311993744),
    (1, 10, 1.0, 0.34089313230205987267),
    (1, 10, 2.0, 0.18766987086960300907),
    (1, 10, 3.5, 0.090884096834321346659),
    (1, 10, 7.0, 0.024491010036687041567),
    (1, 10, 15.0, 0.0030940866862108937549),
    (1, 10, 40.0, 0.000086302161531542508228),
    (1, 996, 0.05, 0.82310912816392312068),
    (1, 996, 0.5, 0.47966552391819729596),
    (1, 996, 1.0, 0.3175533893676677116),
    (1, 996, 2.0, 0.15761171386521631858),
    (1, 996, 3.5, 0.06166187916865230939),
    (1, 996, 7.0, 0.0082794102084627428812),
    (1, 996, 15.0, 0.00011452835763816672028),
    (1, 996, 40.0, 3.8292316175836271695e-10),
    (2, 50, 0.05, 0.95127692383750768747),
    (2, 50, 0.5, 0.60953087052827918189),
    (2, 50, 1.0, 0.37511680225396424416),
    (2, 50, 2.0, 0.14601790491291369012),
    (2, 50, 3.5, 0.037790158773531017397),
    (2, 50, 7.0, 0.0020880974297595278485),
    (2, 50, 15.0, 7.8886090522101180541e-6),
    (2, 50, 40.0, 4.2234397271284135101e-11),
    (2, 2993, 0.05, 0.95123021902847412987),
    (2, 2993, 0.5, 0.60658131297978802),
    (2, 2993, 1.0, 0.36800232023848185831),
    (2, 2993, 2.0, 0.13551611202164591888),
    (2, 2993, 3.5, 0.030321037907071175364),
    (2, 2993, 7.0, 0.00092688658999763841612),
    (2, 2993, 15.0, 3.2962071700515374466e-7),
    (2, 2993, 40.0, 7.183404587359843184e-18),
    (3, 200, 0.05, 0.98518047750342683412),
    (3, 200, 0.5, 0.68270225000562486209),
    (3, 200, 1.0, 0.39392164980907822517),
    (3, 200, 2.0, 0.11524280144697263149),
    (3, 200, 3.5, 0.016487508266236676938),
    (3, 200, 7.0, 0.0001682528781864203855),
    (3, 200, 15.0, 7.6164508328788647668e-9),
    (3, 200, 40.0, 2.7079201317013667917e-20),
    (3, 2989, 0.05, 0.98522300139177911405),
    (3, 2989, 0.5, 0.68229928271177372949),
    (3, 2989, 1.0, 0.39177985071045312371),
    (3, 2989, 2.0, 0.11185430834279911044),
    (3, 2989, 3.5, 0.014874249175558017183),
    (3, 2989, 7.0, 0.00010885577495066885034),
    (3, 2989, 15.0, 1.0863096032751333505e-9),
    (3, 2989, 40.0, 2.4461086928838600237e-25),
    (5, 20, 0.05, 0.9982251495621256584),
    (5, 20, 0.5, 0.77260438579050489406),
    (5, 20, 1.0, 0.44302518468487967343),
    (5, 20, 2.0, 0.12250724468184247427),
    (5, 20, 3.5, 0.0195835563879803849),
    (5, 20, 7.0, 0.00062859995514703368993),
    (5, 20, 15.0, 3.5283744224153622177e-6),
    (5, 20, 40.0, 9.6098158904729124066e-10),
    (10, 100, 0.05, 0.99999213140599845309),
    (10, 100, 0.5, 0.88635039115307401456),
    (10, 100, 1.0, 0.44881727956049987449),
    (10, 100, 2.0, 0.040988139770403188296),
    (10, 100, 3.5, 0.00055010663354000916678),
    (10, 100, 7.0, 3.0626261053326795305e-8),
    (10, 100, 15.0, 5.4779898096094641452e-16),
    (10, 100, 40.0, 1.4874637468066977415e-30),
];
